// Copyright (c) 2026 The sesscomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sesscomp_cli/cli.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>

#include "settings.h"
#include "sesscomp/checkpoint.h"
#include "sesscomp/corpus_io.h"
#include "sesscomp/error.h"
#include "sesscomp/eval.h"
#include "sesscomp/qstack.h"
#include "sesscomp/scorer.h"
#include "sesscomp/session_net.h"
#include "sesscomp/synthgen.h"

namespace sesscomp::cli {
namespace {

using nlohmann::json;

Error Invalid(const std::string& msg) { return Error(Errc::kInvalidArgument, msg); }

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f%%", 100.0 * v);
  return buf;
}

class TextOutput {
 public:
  TextOutput(const std::string& path, const std::string& digest) : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw Error(Errc::kIo, "cannot open " + path + " for writing");
    os_ << "# config-digest " << digest << '\n';
  }
  std::ostream& stream() { return os_; }
  void Close() {
    os_.close();
    if (!os_) throw Error(Errc::kIo, "write to " + path_ + " failed");
  }

 private:
  std::string path_;
  std::ofstream os_;
};

void WriteSidecar(const std::string& path, const std::string& digest) {
  std::ofstream os(path + ".digest", std::ios::binary);
  os << digest << '\n';
  if (!os) throw Error(Errc::kIo, "cannot write " + path + ".digest");
}

void WriteLossLog(const std::string& path, const std::string& digest, const std::vector<double>& curve) {
  TextOutput log(path, digest);
  log.stream() << "step\tloss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) log.stream() << i + 1 << '\t' << Num(curve[i]) << '\n';
  log.Close();
}

int ToInt(const Settings& s, const std::string& key) {
  const long long v = s.Int(key);
  if (v < -2147483647LL || v > 2147483647LL) throw Invalid("setting '" + key + "' is out of range");
  return static_cast<int>(v);
}

Activation ParseActivation(const std::string& name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  throw Invalid("activation must be 'gelu' or 'leaky_relu', got '" + name + "'");
}

// "begin:end" over the corpus speakers in first-appearance order.
EmbeddingCorpus SelectRange(const EmbeddingCorpus& corpus, const std::string& range) {
  const auto colon = range.find(':');
  if (colon == std::string::npos) throw Invalid("speaker range must look like 'begin:end', got '" + range + "'");
  const auto spk = corpus.Speakers();
  auto parse = [&](const std::string& s, std::size_t fallback) -> std::size_t {
    if (s.empty()) return fallback;
    if (s.find_first_not_of("0123456789") != std::string::npos) {
      throw Invalid("speaker range bound '" + s + "' is not a non-negative integer");
    }
    return static_cast<std::size_t>(std::stoull(s));
  };
  const std::size_t begin = parse(range.substr(0, colon), 0);
  const std::size_t end = parse(range.substr(colon + 1), spk.size());
  if (begin >= end || end > spk.size()) {
    throw Invalid("speaker range " + range + " is empty or exceeds the " +
                  std::to_string(spk.size()) + " speakers of the corpus");
  }
  return corpus.SelectSpeakers(std::vector<std::string>(spk.begin() + static_cast<std::ptrdiff_t>(begin),
                                                        spk.begin() + static_cast<std::ptrdiff_t>(end)));
}

SessionModel LoadSessionModel(const std::string& path) {
  Checkpoint c = LoadCheckpoint(path);
  if (c.kind != NetworkKind::kSessionNet) throw Invalid(path + " is not a session-network checkpoint");
  return SessionModel{c.spec, std::move(c.params)};
}

struct Models {
  std::vector<EmbeddingCorpus> corpora;
  std::vector<SessionModel> sessions;

  std::vector<ModelView> Views() const {
    std::vector<ModelView> v;
    for (std::size_t k = 0; k < corpora.size(); ++k) v.push_back({&corpora[k], &sessions[k]});
    return v;
  }
};

Models LoadModels(const Settings& s) {
  const auto corpora = s.Strings("corpus");
  const auto nets = s.Strings("session_net");
  if (corpora.empty()) throw Invalid("at least one --corpus is required");
  if (nets.size() != corpora.size()) {
    throw Invalid("need one --session-net per --corpus (" + std::to_string(corpora.size()) +
                  " corpora, " + std::to_string(nets.size()) + " networks)");
  }
  Models m;
  for (std::size_t k = 0; k < corpora.size(); ++k) {
    m.corpora.push_back(LoadCorpus(corpora[k]));
    m.sessions.push_back(LoadSessionModel(nets[k]));
  }
  return m;
}

Protocol LoadTrials(const Settings& s, const EmbeddingCorpus& corpus) {
  Protocol p = LoadProtocol(s.String("trials"));
  RequireResolvable(p, corpus);
  return p;
}

// ---------------------------------------------------------------------------

KeySpec Path(const std::string& name, const std::string& help) {
  return {name, Kind::kString, nullptr, help, false};
}

int SynthGen(const Settings& s, std::ostream& out) {
  s.Require("seed");
  SynthConfig c;
  c.num_speakers = ToInt(s, "num_speakers");
  c.sessions_per_speaker = ToInt(s, "sessions_per_speaker");
  c.utterances_per_session = ToInt(s, "utterances_per_session");
  c.shared_session_groups = ToInt(s, "shared_session_groups");
  c.dimension = ToInt(s, "dimension");
  c.windows_per_utterance = ToInt(s, "windows_per_utterance");
  c.alpha = s.Double("alpha");
  c.beta = s.Double("beta");
  c.gamma = s.Double("gamma");
  c.sigma = s.Double("sigma");
  c.session_rank = ToInt(s, "session_rank");
  c.num_augmentations = ToInt(s, "num_augmentations");
  c.seed = s.Uint("seed");
  c.realization = s.Uint("realization");
  const SynthOutput g = Generate(c);
  const std::string path = s.String("out");
  SaveCorpus(g.corpus, path);
  WriteSidecar(path, s.Digest());
  if (s.has("truth_out")) {
    SaveGroundTruth(g.truth, s.String("truth_out"));
    WriteSidecar(s.String("truth_out"), s.Digest());
  }
  out << "wrote " << g.corpus.size() << " utterances of " << c.num_speakers << " speakers to " << path << '\n';
  return 0;
}

int TrainSession(const Settings& s, std::ostream& out) {
  s.Require("seed");
  SessionNetConfig c;
  c.hidden_dim = ToInt(s, "hidden_dim");
  c.num_blocks = ToInt(s, "num_blocks");
  c.embed_dim = ToInt(s, "embed_dim");
  c.dropout = s.Double("dropout");
  c.activation = ParseActivation(s.String("activation"));
  c.steps = ToInt(s, "steps");
  c.speakers_per_batch = ToInt(s, "speakers_per_batch");
  c.learning_rate = s.Double("learning_rate");
  c.seed = s.Uint("seed");
  c.window_inputs = s.Bool("window_inputs");
  EmbeddingCorpus corpus = LoadCorpus(s.String("corpus"));
  if (s.has("speakers")) corpus = SelectRange(corpus, s.String("speakers"));
  const SessionTrainResult r = TrainSessionNet(corpus, c);
  const std::string path = s.String("out");
  SaveCheckpoint(Checkpoint{NetworkKind::kSessionNet, 1, r.model.spec, r.model.params}, path);
  WriteSidecar(path, s.Digest());
  if (s.has("log")) WriteLossLog(s.String("log"), s.Digest(), r.loss_curve);
  out << "trained session network on " << corpus.Speakers().size() << " speakers, final loss "
      << Num(r.loss_curve.back()) << '\n';
  return 0;
}

int Score(const Settings& s, std::ostream& out) {
  std::vector<ScoredTrial> scored;
  if (s.has("qstack")) {
    const Models m = LoadModels(s);
    const QStackModel q = FromCheckpoint(LoadCheckpoint(s.String("qstack")));
    if (q.num_models != static_cast<int>(m.corpora.size())) {
      throw Invalid("Q-stack checkpoint stacks " + std::to_string(q.num_models) + " model(s) but " +
                    std::to_string(m.corpora.size()) + " were given");
    }
    const Protocol p = LoadTrials(s, m.corpora.front());
    for (const auto& c : m.corpora) RequireResolvable(p, c);
    const FeatureBuilder builder(m.Views());
    const TrialScorer first(m.corpora.front(), &m.sessions.front());
    for (const auto& t : p.trials) {
      TrialScore ts = first.Score(t, 0.0);
      ts.score = QStackScore(q, builder.Build(t.enrol_id, t.test_id));
      scored.push_back({t, ts});
    }
  } else {
    const auto corpora = s.Strings("corpus");
    const auto nets = s.Strings("session_net");
    if (corpora.size() != 1 || nets.size() > 1) {
      throw Invalid("compensated scoring takes one --corpus and at most one --session-net");
    }
    const EmbeddingCorpus corpus = LoadCorpus(corpora.front());
    std::unique_ptr<SessionModel> model;
    if (!nets.empty()) model = std::make_unique<SessionModel>(LoadSessionModel(nets.front()));
    const double w = s.Double("w");
    if (w != 0.0 && !model) throw Invalid("--w > 0 needs a --session-net");
    const TrialScorer scorer(corpus, model.get());
    scored = ScoreProtocol(LoadTrials(s, corpus), scorer, w);
  }
  TextOutput o(s.String("out"), s.Digest());
  WriteScoredTrials(scored, o.stream());
  o.Close();
  out << "scored " << scored.size() << " trials\n";
  return 0;
}

int SweepW(const Settings& s, std::ostream& out) {
  const EmbeddingCorpus corpus = LoadCorpus(s.String("corpus"));
  const SessionModel model = LoadSessionModel(s.String("session_net"));
  const std::vector<double> grid = s.has("grid") ? s.Doubles("grid") : DefaultWeightGrid();
  for (double w : grid) {
    if (!(w >= 0.0)) throw Invalid("weight grid values must be >= 0");
  }
  const TrialScorer scorer(corpus, &model);
  const WeightSweepResult r = SweepWeight(LoadTrials(s, corpus), scorer, grid);
  TextOutput o(s.String("out"), s.Digest());
  WriteSweep(r, o.stream());
  o.stream() << "# best_w " << Num(r.best_w) << " eer " << Num(r.best_eer) << '\n';
  o.Close();
  out << "best_w " << Num(r.best_w) << " eer " << Percent(r.best_eer) << '\n';
  return 0;
}

int TrainQStackCommand(const Settings& s, std::ostream& out) {
  s.Require("seed");
  QStackConfig c;
  c.hidden_dim = ToInt(s, "hidden_dim");
  c.dropout = s.Double("dropout");
  c.leaky_slope = s.Double("leaky_slope");
  c.steps = ToInt(s, "steps");
  c.batch_size = ToInt(s, "batch_size");
  c.learning_rate = s.Double("learning_rate");
  c.seed = s.Uint("seed");
  c.permute_windows = s.Bool("permute_windows");
  const Models m = LoadModels(s);
  const Protocol p = LoadTrials(s, m.corpora.front());
  for (const auto& corpus : m.corpora) RequireResolvable(p, corpus);
  RequireBothClasses(p);
  const FeatureBuilder builder(m.Views());
  const QStackDataset data = BuildDataset(builder, p);
  if (s.has("features_out")) {
    SaveFeatures(data, s.String("features_out"));
    WriteSidecar(s.String("features_out"), s.Digest());
  }
  std::vector<double> curve;
  const QStackModel q = TrainQStack(data, c, builder.num_models(), &curve);
  const std::string path = s.String("out");
  SaveCheckpoint(ToCheckpoint(q), path);
  WriteSidecar(path, s.Digest());
  if (s.has("log")) WriteLossLog(s.String("log"), s.Digest(), curve);
  out << "trained Q-stack on " << data.size() << " trials (" << data.feature_dim << " features), final loss "
      << Num(curve.back()) << '\n';
  return 0;
}

int Evaluate(const Settings& s, std::ostream& out) {
  std::ifstream is(s.String("scores"));
  if (!is) throw Error(Errc::kIo, "cannot open " + s.String("scores"));
  const auto scored = ReadScoredTrials(is);
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (const auto& t : scored) {
    scores.push_back(t.score.score);
    labels.push_back(t.trial.target ? 1 : 0);
  }
  const EerResult r = ComputeEer(scores, labels);
  const auto targets = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (s.has("out")) {
    TextOutput o(s.String("out"), s.Digest());
    o.stream() << "eer\t" << Num(r.eer) << "\nthreshold\t" << Num(r.threshold) << "\ntargets\t" << targets
               << "\nnontargets\t" << labels.size() - targets << '\n';
    o.Close();
  }
  if (s.has("det")) {
    TextOutput o(s.String("det"), s.Digest());
    WriteDet(DetPoints(scores, labels), o.stream());
    o.Close();
  }
  out << "EER " << Percent(r.eer) << " at threshold " << Num(r.threshold) << " over " << targets << " targets and "
      << labels.size() - targets << " nontargets\n";
  return 0;
}

int MixTrials(const Settings& s, std::ostream& out) {
  const Protocol pos = LoadProtocol(s.String("positives"));
  const std::string mode = s.String("mode");
  Protocol mixed;
  if (mode == "cross") {
    mixed = MixProtocols(pos, LoadProtocol(s.String("negatives")));
  } else if (mode == "union") {
    mixed = UnionProtocols(pos, LoadProtocol(s.String("negatives")));
  } else {
    throw Invalid("mix mode must be 'cross' or 'union', got '" + mode + "'");
  }
  SaveProtocol(mixed, s.String("out"), "config-digest " + s.Digest());
  out << "wrote " << mixed.num_targets() << " targets and " << mixed.num_nontargets() << " nontargets\n";
  return 0;
}

int MakeTrials(const Settings& s, std::ostream& out) {
  EmbeddingCorpus corpus = LoadCorpus(s.String("corpus"));
  if (s.has("speakers")) corpus = SelectRange(corpus, s.String("speakers"));
  const std::string kind = s.String("kind");
  Protocol p;
  if (kind == "confound") {
    p = MakeConfoundProtocol(corpus);
  } else if (kind == "standard") {
    s.Require("seed");
    const long long nt = s.Int("num_targets");
    const long long nn = s.Int("num_nontargets");
    if (nt < 0 || nn < 0) throw Invalid("trial counts must be >= 0");
    p = MakeStandardProtocol(corpus, static_cast<std::size_t>(nt), static_cast<std::size_t>(nn), s.Uint("seed"));
  } else {
    throw Invalid("trial kind must be 'confound' or 'standard', got '" + kind + "'");
  }
  SaveProtocol(p, s.String("out"), "config-digest " + s.Digest());
  out << "wrote " << p.num_targets() << " targets and " << p.num_nontargets() << " nontargets\n";
  return 0;
}

struct Command {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
  std::function<int(const Settings&, std::ostream&)> run;
};

std::vector<Command> Commands() {
  const SynthConfig synth;
  const SessionNetConfig sess;
  const QStackConfig qs;
  std::vector<Command> cmds;
  cmds.push_back({"synth-gen", "Generate a synthetic embedding corpus",
                  {Path("out", "corpus file to write"),
                   Path("truth_out", "ground-truth latents file to write"),
                   {"num_speakers", Kind::kInt, synth.num_speakers, "speakers"},
                   {"sessions_per_speaker", Kind::kInt, synth.sessions_per_speaker, "sessions per speaker"},
                   {"utterances_per_session", Kind::kInt, synth.utterances_per_session, "utterances per session"},
                   {"shared_session_groups", Kind::kInt, synth.shared_session_groups,
                    "sessions shared by a speaker pair"},
                   {"dimension", Kind::kInt, synth.dimension, "embedding dimension"},
                   {"windows_per_utterance", Kind::kInt, synth.windows_per_utterance, "windows per utterance"},
                   {"alpha", Kind::kDouble, synth.alpha, "speaker weight"},
                   {"beta", Kind::kDouble, synth.beta, "session weight"},
                   {"gamma", Kind::kDouble, synth.gamma, "augmentation weight"},
                   {"sigma", Kind::kDouble, synth.sigma, "window noise"},
                   {"session_rank", Kind::kInt, synth.session_rank, "session subspace rank, 0 for full"},
                   {"num_augmentations", Kind::kInt, synth.num_augmentations, "augmentation tags, 0 for one per slot"},
                   {"seed", Kind::kUint, nullptr, "latent seed (required)"},
                   {"realization", Kind::kUint, synth.realization, "noise realization"}},
                  SynthGen});
  cmds.push_back({"train-session", "Train the session network",
                  {Path("corpus", "training corpus"), Path("out", "checkpoint to write"),
                   Path("log", "training log to write"),
                   {"speakers", Kind::kString, nullptr, "speaker index range begin:end"},
                   {"hidden_dim", Kind::kInt, sess.hidden_dim, "hidden width"},
                   {"num_blocks", Kind::kInt, sess.num_blocks, "residual blocks"},
                   {"embed_dim", Kind::kInt, sess.embed_dim, "session embedding size"},
                   {"dropout", Kind::kDouble, sess.dropout, "dropout rate"},
                   {"activation", Kind::kString, "gelu", "gelu or leaky_relu"},
                   {"steps", Kind::kInt, sess.steps, "optimizer steps"},
                   {"speakers_per_batch", Kind::kInt, sess.speakers_per_batch, "quadruples per batch"},
                   {"learning_rate", Kind::kDouble, sess.learning_rate, "Adam learning rate"},
                   {"seed", Kind::kUint, nullptr, "training seed (required)"},
                   {"window_inputs", Kind::kBool, sess.window_inputs, "train on single windows"}},
                  TrainSession});
  cmds.push_back({"score", "Score a trial list",
                  {{"corpus", Kind::kStringList, nullptr, "corpus file(s)", false},
                   {"session_net", Kind::kStringList, nullptr, "session checkpoint(s)", false},
                   Path("trials", "trial list"), Path("qstack", "Q-stack checkpoint"),
                   Path("out", "scored trials to write"),
                   {"w", Kind::kDouble, 0.0, "session weight"}},
                  Score});
  cmds.push_back({"sweep-w", "Pick the session weight on a dev trial list",
                  {Path("corpus", "dev corpus"), Path("session_net", "session checkpoint"),
                   Path("trials", "dev trial list"), Path("out", "sweep table to write"),
                   {"grid", Kind::kDoubleList, nullptr, "weights to try (default 0 to 1 by 0.01)"}},
                  SweepW});
  cmds.push_back({"train-qstack", "Train the Q-stack classifier",
                  {{"corpus", Kind::kStringList, nullptr, "corpus file per model", false},
                   {"session_net", Kind::kStringList, nullptr, "session checkpoint per model", false},
                   Path("trials", "training trial list"), Path("out", "checkpoint to write"),
                   Path("log", "training log to write"), Path("features_out", "feature dump to write"),
                   {"hidden_dim", Kind::kInt, qs.hidden_dim, "hidden width"},
                   {"dropout", Kind::kDouble, qs.dropout, "dropout rate"},
                   {"leaky_slope", Kind::kDouble, qs.leaky_slope, "leaky ReLU slope"},
                   {"steps", Kind::kInt, qs.steps, "optimizer steps"},
                   {"batch_size", Kind::kInt, qs.batch_size, "balanced batch size"},
                   {"learning_rate", Kind::kDouble, qs.learning_rate, "Adam learning rate"},
                   {"seed", Kind::kUint, nullptr, "training seed (required)"},
                   {"permute_windows", Kind::kBool, qs.permute_windows, "window-permutation augmentation"}},
                  TrainQStackCommand});
  cmds.push_back({"evaluate", "EER and DET of a scored trial list",
                  {Path("scores", "scored trials"), Path("out", "summary to write"),
                   Path("det", "DET points to write")},
                  Evaluate});
  cmds.push_back({"mix-trials", "Combine two trial lists",
                  {Path("positives", "first list"), Path("negatives", "second list"),
                   Path("out", "trial list to write"),
                   {"mode", Kind::kString, "cross", "cross: targets of the first with nontargets of the second; "
                                                    "union: both lists"}},
                  MixTrials});
  cmds.push_back({"make-trials", "Build a trial list from a corpus",
                  {Path("corpus", "corpus"), Path("out", "trial list to write"),
                   {"kind", Kind::kString, "confound", "confound or standard"},
                   {"speakers", Kind::kString, nullptr, "speaker index range begin:end"},
                   {"num_targets", Kind::kInt, 1000, "standard: target trials"},
                   {"num_nontargets", Kind::kInt, 1000, "standard: nontarget trials"},
                   {"seed", Kind::kUint, nullptr, "standard: sampling seed"}},
                  MakeTrials});
  return cmds;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Session-variability compensation for speaker verification", "sesscomp"};
  app.require_subcommand(1);
  std::vector<Command> cmds = Commands();
  std::vector<std::unique_ptr<Settings>> settings;
  std::vector<CLI::App*> subs;
  for (auto& c : cmds) {
    settings.push_back(std::make_unique<Settings>(c.name, c.keys));
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    settings.back()->Register(*sub);
    subs.push_back(sub);
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  for (std::size_t k = 0; k < cmds.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    try {
      settings[k]->Resolve();
      return cmds[k].run(*settings[k], out);
    } catch (const Error& e) {
      err << "sesscomp " << cmds[k].name << ": error [" << ErrcName(e.code()) << "]: " << e.what() << '\n';
      return e.code() == Errc::kInvalidArgument ? 1 : 2;
    }
  }
  return 1;
}

}  // namespace sesscomp::cli
