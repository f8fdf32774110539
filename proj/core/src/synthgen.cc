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

#include "sesscomp/synthgen.h"

#include <fstream>
#include <random>
#include <vector>

#include "sesscomp/binary_io.h"
#include "sesscomp/error.h"

namespace sesscomp {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Embedding GaussianVector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Embedding v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Embedding UnitVector(int n, std::mt19937_64& rng) {
  Embedding v = GaussianVector(n, rng);
  return v / v.norm();
}

std::string Padded(int value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

void Validate(const SynthConfig& c) {
  auto fail = [](const std::string& what) {
    throw Error(Errc::kInvalidArgument, "synth config: " + what);
  };
  if (c.num_speakers < 1) fail("num_speakers must be >= 1");
  if (c.sessions_per_speaker < 1) fail("sessions_per_speaker must be >= 1");
  if (c.utterances_per_session < 1) fail("utterances_per_session must be >= 1");
  if (c.dimension < 1) fail("dimension must be >= 1");
  if (c.windows_per_utterance < 1) fail("windows_per_utterance must be >= 1");
  if (c.shared_session_groups < 0) fail("shared_session_groups must be >= 0");
  if (c.shared_session_groups > 0 &&
      c.shared_session_groups > (c.num_speakers / 2) * c.sessions_per_speaker) {
    fail("shared_session_groups exceeds (num_speakers / 2) * sessions_per_speaker");
  }
  if (!(c.alpha > 0.0)) fail("alpha must be > 0");
  if (c.beta < 0.0 || c.gamma < 0.0 || c.sigma < 0.0) fail("strengths must be >= 0");
  if (c.session_rank < 0 || c.session_rank > c.dimension) {
    fail("session_rank must lie in [0, dimension]");
  }
  if (c.num_augmentations < 0) fail("num_augmentations must be >= 0");
}

SynthOutput Generate(const SynthConfig& c) {
  Validate(c);
  const int d = c.dimension;
  const int n_spk = c.num_speakers;
  const int n_sess = c.sessions_per_speaker;
  const int n_aug = c.num_augmentations > 0 ? c.num_augmentations : n_sess;

  std::mt19937_64 latent_rng(c.seed);
  GroundTruth truth;
  truth.dimension = d;

  std::vector<std::string> speaker_ids(n_spk);
  for (int i = 0; i < n_spk; ++i) {
    speaker_ids[i] = "spk" + Padded(i, 4);
    truth.speakers.emplace(speaker_ids[i], UnitVector(d, latent_rng));
  }

  Eigen::MatrixXd basis;
  const bool subspace = c.session_rank > 0 && c.session_rank < d;
  if (subspace) {
    Eigen::MatrixXd g(d, c.session_rank);
    for (int j = 0; j < c.session_rank; ++j) g.col(j) = GaussianVector(d, latent_rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(d, c.session_rank);
  }
  auto draw_session = [&]() -> Embedding {
    if (!subspace) return UnitVector(d, latent_rng);
    Embedding v = basis * GaussianVector(c.session_rank, latent_rng);
    return v / v.norm();
  };

  // Slot table: session id for (speaker, slot).
  std::vector<std::vector<std::string>> slot_session(n_spk, std::vector<std::string>(n_sess));
  for (int i = 0; i < n_spk; ++i) {
    for (int s = 0; s < n_sess; ++s) {
      slot_session[i][s] = speaker_ids[i] + "-s" + std::to_string(s);
    }
  }
  const int pairs = n_spk / 2;
  for (int g = 0; g < c.shared_session_groups; ++g) {
    const int p = g % pairs;
    const int slot = (g / pairs) % n_sess;
    const std::string id = "shared" + Padded(g, 4);
    slot_session[2 * p][slot] = id;
    slot_session[2 * p + 1][slot] = id;
  }
  for (int i = 0; i < n_spk; ++i) {
    for (int s = 0; s < n_sess; ++s) {
      const auto& id = slot_session[i][s];
      if (!truth.sessions.count(id)) truth.sessions.emplace(id, draw_session());
    }
  }

  std::vector<std::string> aug_ids(n_aug);
  for (int k = 0; k < n_aug; ++k) {
    aug_ids[k] = "aug" + std::to_string(k);
    truth.augmentations.emplace(aug_ids[k], UnitVector(d, latent_rng));
  }

  std::mt19937_64 noise_rng(SplitMix64(c.seed ^ SplitMix64(c.realization + 1)));
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingCorpus corpus(d, c.windows_per_utterance);
  for (int i = 0; i < n_spk; ++i) {
    const Embedding& v_spk = truth.speakers.at(speaker_ids[i]);
    for (int s = 0; s < n_sess; ++s) {
      const std::string& session = slot_session[i][s];
      const std::string& aug = aug_ids[(i + s) % n_aug];
      const Embedding base = c.alpha * v_spk + c.beta * truth.sessions.at(session) +
                             c.gamma * truth.augmentations.at(aug);
      for (int u = 0; u < c.utterances_per_session; ++u) {
        UtteranceRecord rec;
        rec.utterance_id =
            speaker_ids[i] + "-s" + std::to_string(s) + "-u" + std::to_string(u);
        rec.speaker_id = speaker_ids[i];
        rec.session_id = session;
        rec.augmentation_id = aug;
        rec.windows.resize(d, c.windows_per_utterance);
        for (int w = 0; w < c.windows_per_utterance; ++w) {
          for (int k = 0; k < d; ++k) {
            const double v = base[k] + c.sigma * normal(noise_rng);
            // Quantize to the f32 storage precision so in-memory and reloaded
            // corpora are identical.
            rec.windows(k, w) = static_cast<double>(static_cast<float>(v));
          }
        }
        corpus.Add(std::move(rec));
      }
    }
  }
  return SynthOutput{std::move(corpus), std::move(truth)};
}

double OracleSessionSimilarity(const GroundTruth& truth, const UtteranceRecord& a,
                               const UtteranceRecord& b) {
  auto ia = truth.sessions.find(a.session_id);
  auto ib = truth.sessions.find(b.session_id);
  if (ia == truth.sessions.end() || ib == truth.sessions.end()) {
    throw Error(Errc::kNotFound, "session id missing from ground truth: " +
                                     (ia == truth.sessions.end() ? a.session_id
                                                                 : b.session_id));
  }
  if (a.session_id == b.session_id) return 1.0;
  return Cosine(ia->second, ib->second);
}

namespace {

void WriteTable(BinaryWriter& w, const std::map<std::string, Embedding>& table) {
  w.U64(table.size());
  for (const auto& [id, v] : table) {
    w.String(id);
    for (Eigen::Index k = 0; k < v.size(); ++k) w.F64(v[k]);
  }
}

std::map<std::string, Embedding> ReadTable(BinaryReader& r, int d) {
  std::map<std::string, Embedding> table;
  const std::uint64_t n = r.U64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string id = r.String();
    Embedding v(d);
    for (int k = 0; k < d; ++k) {
      v[k] = r.F64();
      if (!std::isfinite(v[k])) throw Error(Errc::kNonFinite, "ground truth latent " + id);
    }
    table.emplace(std::move(id), std::move(v));
  }
  return table;
}

}  // namespace

void WriteGroundTruth(const GroundTruth& truth, std::ostream& os) {
  BinaryWriter w(os);
  w.Magic(std::string_view(kTruthMagic, 8));
  w.U32(kTruthVersion);
  w.U32(static_cast<std::uint32_t>(truth.dimension));
  WriteTable(w, truth.speakers);
  WriteTable(w, truth.sessions);
  WriteTable(w, truth.augmentations);
}

GroundTruth ReadGroundTruth(std::istream& is) {
  BinaryReader r(is, "ground truth");
  r.ExpectMagic(std::string_view(kTruthMagic, 8));
  const std::uint32_t version = r.U32();
  if (version != kTruthVersion) {
    throw Error(Errc::kVersionMismatch, "ground truth version " + std::to_string(version));
  }
  GroundTruth truth;
  truth.dimension = static_cast<int>(r.U32());
  truth.speakers = ReadTable(r, truth.dimension);
  truth.sessions = ReadTable(r, truth.dimension);
  truth.augmentations = ReadTable(r, truth.dimension);
  return truth;
}

void SaveGroundTruth(const GroundTruth& truth, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::kIo, "cannot open " + path + " for writing");
  WriteGroundTruth(truth, os);
}

GroundTruth LoadGroundTruth(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::kIo, "cannot open " + path);
  return ReadGroundTruth(is);
}

}  // namespace sesscomp
