// Copyright 2026 The srnlab Authors.
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

#include "srnlab/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "srnlab/errors.hpp"

namespace srnlab {


namespace {

const char* const kModelKeys[] = {"vocab_size_with_pad", "embed_dim",  "gru_units",
                                  "head",                "hidden_dense_units", "window",
                                  "embed_dropout_rate"};

bool is_model_key(const std::string& key) {
  for (const char* k : kModelKeys) {
    if (key == k) return true;
  }
  return false;
}

void append_f32(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double read_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return static_cast<double>(std::bit_cast<float>(bits));
}

std::size_t parse_count(const std::string& text, const std::string& field) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw CheckpointError("checkpoint field '" + field + "': bad integer '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& text, const std::string& field) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw CheckpointError("checkpoint field '" + field + "': bad number '" + text + "'");
  }
  return v;
}

struct TensorEntry {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
};

std::vector<std::pair<std::string, const Matrix*>> tensors_of(const Checkpoint& c) {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (const Parameter* p : c.params.list()) out.emplace_back(p->name, &p->value);
  if (c.target_embeddings) out.emplace_back("target_embedding", &*c.target_embeddings);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string Checkpoint::metadata_value(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return {};
}

std::string serialize_checkpoint(const Checkpoint& c) {
  std::ostringstream m;
  m << kCheckpointMagic;
  m << "vocab_size_with_pad=" << c.config.vocab_size_with_pad << '\n'
    << "embed_dim=" << c.config.embed_dim << '\n'
    << "gru_units=" << c.config.gru_units << '\n'
    << "head=" << to_string(c.config.head) << '\n'
    << "hidden_dense_units=" << c.config.hidden_dense_units << '\n'
    << "window=" << c.config.window << '\n'
    << "embed_dropout_rate=" << format_double(c.config.embed_dropout_rate) << '\n';
  for (const auto& [k, v] : c.metadata) {
    if (k.empty() || is_model_key(k) || k.find_first_of("= \n") != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw CheckpointError("metadata key '" + k + "' cannot be stored");
    }
    m << k << '=' << v << '\n';
  }
  const auto tensors = tensors_of(c);
  m << "tensors " << tensors.size() << '\n';
  std::size_t offset = 0;
  for (const auto& [name, mat] : tensors) {
    const std::size_t length = mat->size() * 4;
    m << name << ' ' << mat->shape_string() << " f32 " << offset << ' ' << length << '\n';
    offset += length;
  }
  m << "payload " << offset << '\n';

  std::string out = m.str();
  out.reserve(out.size() + offset);
  for (const auto& entry : tensors) {
    for (double v : entry.second->values()) append_f32(out, v);
  }
  return out;
}

std::string checkpoint_manifest(const std::string& bytes) {
  const auto pos = bytes.find("\npayload ");
  if (pos == std::string::npos) throw CheckpointError("checkpoint manifest has no payload line");
  const auto end = bytes.find('\n', pos + 1);
  if (end == std::string::npos) throw CheckpointError("checkpoint payload line is unterminated");
  return bytes.substr(0, end + 1);
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const std::size_t magic_len = sizeof(kCheckpointMagic) - 1;
  if (bytes.compare(0, magic_len, kCheckpointMagic) != 0) {
    throw CheckpointError("bad magic: not an SRNLAB1 checkpoint");
  }
  const std::string manifest = checkpoint_manifest(bytes);
  std::istringstream in(manifest.substr(magic_len));

  Checkpoint c;
  std::vector<TensorEntry> entries;
  std::size_t declared_tensors = 0;
  std::size_t payload_length = 0;
  bool seen[std::size(kModelKeys)] = {};
  std::string line;
  enum class Section { kKeys, kTensors } section = Section::kKeys;
  while (std::getline(in, line)) {
    if (line.rfind("payload ", 0) == 0) {
      payload_length = parse_count(line.substr(8), "payload");
      break;
    }
    if (section == Section::kKeys && line.rfind("tensors ", 0) == 0) {
      declared_tensors = parse_count(line.substr(8), "tensors");
      section = Section::kTensors;
      continue;
    }
    if (section == Section::kKeys) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CheckpointError("malformed manifest line '" + line + "'");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      std::size_t slot = 0;
      for (; slot < std::size(kModelKeys); ++slot) {
        if (key == kModelKeys[slot]) break;
      }
      if (slot == std::size(kModelKeys)) {
        c.metadata.emplace_back(key, value);
        continue;
      }
      seen[slot] = true;
      if (key == "vocab_size_with_pad") c.config.vocab_size_with_pad = parse_count(value, key);
      else if (key == "embed_dim") c.config.embed_dim = parse_count(value, key);
      else if (key == "gru_units") c.config.gru_units = parse_count(value, key);
      else if (key == "hidden_dense_units") c.config.hidden_dense_units = parse_count(value, key);
      else if (key == "window") c.config.window = parse_count(value, key);
      else if (key == "embed_dropout_rate") c.config.embed_dropout_rate = parse_real(value, key);
      else if (key == "head") {
        try {
          c.config.head = parse_head_type(value);
        } catch (const ConfigError&) {
          throw CheckpointError("checkpoint field 'head': unknown value '" + value + "'");
        }
      }
      continue;
    }
    std::istringstream fields(line);
    TensorEntry e;
    std::string shape, dtype, offset, length;
    if (!(fields >> e.name >> shape >> dtype >> offset >> length)) {
      throw CheckpointError("malformed tensor line '" + line + "'");
    }
    if (dtype != "f32") throw CheckpointError("tensor '" + e.name + "': unsupported dtype " + dtype);
    const auto x = shape.find('x');
    if (x == std::string::npos) throw CheckpointError("tensor '" + e.name + "': bad shape " + shape);
    e.rows = parse_count(shape.substr(0, x), e.name + ".rows");
    e.cols = parse_count(shape.substr(x + 1), e.name + ".cols");
    e.offset = parse_count(offset, e.name + ".offset");
    e.length = parse_count(length, e.name + ".length");
    entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < std::size(kModelKeys); ++i) {
    if (!seen[i]) throw CheckpointError(std::string("checkpoint is missing field '") + kModelKeys[i] + "'");
  }
  if (entries.size() != declared_tensors) {
    throw CheckpointError("manifest declares " + std::to_string(declared_tensors) +
                          " tensors but lists " + std::to_string(entries.size()));
  }
  try {
    c.config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }

  std::size_t expected_offset = 0;
  for (const auto& e : entries) {
    if (e.offset != expected_offset) {
      throw CheckpointError("tensor '" + e.name + "': byte_offset " + std::to_string(e.offset) +
                            " leaves a gap or overlap (expected " +
                            std::to_string(expected_offset) + ")");
    }
    if (e.length != e.rows * e.cols * 4) {
      throw CheckpointError("tensor '" + e.name + "': byte_length does not match shape");
    }
    expected_offset += e.length;
  }
  if (expected_offset != payload_length) {
    throw CheckpointError("payload: manifest covers " + std::to_string(expected_offset) +
                          " bytes but declares " + std::to_string(payload_length));
  }
  const std::size_t available = bytes.size() - manifest.size();
  if (available != payload_length) {
    throw CheckpointError("payload: expected " + std::to_string(payload_length) +
                          " bytes, found " + std::to_string(available) +
                          (available < payload_length ? " (truncated)" : " (trailing data)"));
  }

  // Shapes come from a freshly initialised model of the stored config.
  ModelParams shape_source = init_params(c.config, 0);
  const char* payload = bytes.data() + manifest.size();
  auto load = [&](const TensorEntry& e, std::size_t rows, std::size_t cols) {
    if (e.rows != rows || e.cols != cols) {
      throw CheckpointError("tensor '" + e.name + "': shape " + std::to_string(e.rows) + "x" +
                            std::to_string(e.cols) + " does not match config (" +
                            std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
    Matrix m(rows, cols);
    const char* p = payload + e.offset;
    for (double& v : m.values()) {
      v = read_f32(p);
      p += 4;
    }
    return m;
  };

  c.params.head = c.config.head;
  auto targets = c.params.list();
  const auto shapes = shape_source.list();
  const bool has_target = entries.size() == targets.size() + 1;
  if (entries.size() != targets.size() && !has_target) {
    throw CheckpointError("checkpoint lists " + std::to_string(entries.size()) +
                          " tensors; config expects " + std::to_string(targets.size()));
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (entries[i].name != shapes[i]->name) {
      throw CheckpointError("tensor " + std::to_string(i) + ": expected '" + shapes[i]->name +
                            "', found '" + entries[i].name + "'");
    }
    *targets[i] = Parameter(shapes[i]->name,
                            load(entries[i], shapes[i]->value.rows(), shapes[i]->value.cols()));
  }
  if (has_target) {
    const auto& e = entries.back();
    if (e.name != "target_embedding") {
      throw CheckpointError("unexpected extra tensor '" + e.name + "'");
    }
    c.target_embeddings = load(e, c.config.vocab_size_with_pad, c.config.embed_dim);
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

void require_compatible(const ModelConfig& stored, const ModelConfig& requested) {
  auto fail = [](const char* field, const std::string& a, const std::string& b) {
    throw CheckpointError(std::string("config mismatch on '") + field + "': checkpoint has " + a +
                          ", requested " + b);
  };
  if (stored.vocab_size_with_pad != requested.vocab_size_with_pad) {
    fail("vocab_size_with_pad", std::to_string(stored.vocab_size_with_pad),
         std::to_string(requested.vocab_size_with_pad));
  }
  if (stored.embed_dim != requested.embed_dim) {
    fail("embed_dim", std::to_string(stored.embed_dim), std::to_string(requested.embed_dim));
  }
  if (stored.gru_units != requested.gru_units) {
    fail("gru_units", std::to_string(stored.gru_units), std::to_string(requested.gru_units));
  }
  if (stored.head != requested.head) fail("head", to_string(stored.head), to_string(requested.head));
  if (stored.hidden_dense_units != requested.hidden_dense_units) {
    fail("hidden_dense_units", std::to_string(stored.hidden_dense_units),
         std::to_string(requested.hidden_dense_units));
  }
  if (stored.window != requested.window) {
    fail("window", std::to_string(stored.window), std::to_string(requested.window));
  }
  if (stored.embed_dropout_rate != requested.embed_dropout_rate) {
    fail("embed_dropout_rate", format_double(stored.embed_dropout_rate),
         format_double(requested.embed_dropout_rate));
  }
}

}  // namespace srnlab
