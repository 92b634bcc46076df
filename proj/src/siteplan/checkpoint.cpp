// Copyright 2026 The Siteplan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "siteplan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "siteplan/error.hpp"
#include "siteplan/hash.hpp"

namespace siteplan {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'C', 'K', 'P', 'T', '0', '1'};

void PutU64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint64_t GetU64(const std::string& in, size_t at) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<size_t>(k)])) << (8 * k);
  return v;
}

std::string TensorBytes(const RelationModel& model) {
  std::string data;
  for (const auto& p : model.params().all()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) PutU64(data, std::bit_cast<std::uint64_t>(p->value.data()[i]));
  }
  return data;
}

std::vector<double> ToVector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void SaveCheckpoint(const RelationModel& model, const Catalog& catalog,
                    const nlohmann::json& metadata, const std::filesystem::path& path) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.params().all()) {
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  const std::string data = TensorBytes(model);
  nlohmann::json header{{"format_version", kCheckpointVersion},
                        {"model", model.config().ToJson()},
                        {"catalog_name", catalog.name()},
                        {"catalog_hash", catalog.Hash()},
                        {"tensors", tensors},
                        {"clue_stats",
                         {{"mean", ToVector(model.clue_stats().mean)},
                          {"var", ToVector(model.clue_stats().var)}}},
                        {"checkpoint_id", Fnv1aHex(data)},
                        {"metadata", metadata.is_null() ? nlohmann::json::object() : metadata}};
  const std::string text = header.dump();
  std::string blob(kMagic, sizeof(kMagic));
  PutU64(blob, text.size());
  blob += text;
  blob += data;
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path, const Catalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string blob = buf.str();
  const std::string where = path.string() + ": ";
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    Fail(ErrorCode::kParse, where + "not a checkpoint");
  }
  const std::uint64_t header_len = GetU64(blob, 8);
  if (header_len > blob.size() - 16) Fail(ErrorCode::kParse, where + "truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, where + e.what());
  }
  Checkpoint ck;
  try {
    if (header.at("format_version").get<int>() != kCheckpointVersion) {
      Fail(ErrorCode::kParse, where + "unsupported format version");
    }
    ck.catalog_hash = header.at("catalog_hash").get<std::string>();
    if (ck.catalog_hash != catalog.Hash()) {
      Fail(ErrorCode::kCatalogMismatch, where + "catalog hash " + ck.catalog_hash +
                                            " does not match " + catalog.Hash());
    }
    ck.model = std::make_unique<RelationModel>(ModelConfig::FromJson(header.at("model")));
    const auto& tensors = header.at("tensors");
    auto& params = ck.model->params().all();
    if (tensors.size() != params.size()) Fail(ErrorCode::kParse, where + "tensor count mismatch");
    size_t at = 16 + header_len;
    for (size_t k = 0; k < params.size(); ++k) {
      ad::Parameter& p = *params[k];
      const auto& t = tensors[k];
      if (t.at("name").get<std::string>() != p.name || t.at("rows").get<Eigen::Index>() != p.value.rows() ||
          t.at("cols").get<Eigen::Index>() != p.value.cols()) {
        Fail(ErrorCode::kParse, where + "tensor " + p.name + " does not match the model layout");
      }
      if (blob.size() < at + 8 * static_cast<size_t>(p.value.size())) {
        Fail(ErrorCode::kParse, where + "truncated tensor data");
      }
      for (Eigen::Index i = 0; i < p.value.size(); ++i, at += 8) {
        p.value.data()[i] = std::bit_cast<double>(GetU64(blob, at));
      }
    }
    if (at != blob.size()) Fail(ErrorCode::kParse, where + "trailing bytes");
    const auto mean = header.at("clue_stats").at("mean").get<std::vector<double>>();
    const auto var = header.at("clue_stats").at("var").get<std::vector<double>>();
    ck.model->clue_stats().mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    ck.model->clue_stats().var = Eigen::Map<const Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
    ck.id = header.at("checkpoint_id").get<std::string>();
    if (ck.id != Fnv1aHex(blob.substr(16 + header_len))) {
      Fail(ErrorCode::kParse, where + "tensor data does not match its checksum");
    }
    ck.metadata = header.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, where + e.what());
  }
  return ck;
}

}  // namespace siteplan
