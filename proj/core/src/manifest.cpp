#include "imti/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "imti/common.hpp"

namespace imti {

namespace {

using nlohmann::json;

double require_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + ": field \"" + key + "\" is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(where + ": field \"" + key + "\" is not finite");
  return x;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError(where + ": field \"" + key + "\" is not a string");
  return v.get<std::string>();
}

void check_unit_range(double x, const char* key, const std::string& where) {
  if (x < 0.0 || x > 1.0)
    throw ValidationError(strf("%s: field \"%s\" = %g outside [0, 1]", where.c_str(), key, x));
}

std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20)
          out += strf("\\u%04x", c);
        else
          out.push_back(c);
    }
  }
  return out;
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split \"" + s + "\" (expected train, val, or test)");
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();

  static const std::set<std::string> known_keys = {
      "id", "embedding", "waveform", "intelligibility", "cer_whisper", "cer_google", "stoi", "split"};

  std::vector<ManifestEntry> entries;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = strf("%s:%zu", path.string().c_str(), lineno);

    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw ValidationError(where + ": line is not a JSON object");
    for (const auto& item : obj.items())
      if (!known_keys.count(item.key()))
        throw ValidationError(where + ": unknown field \"" + item.key() + "\"");

    ManifestEntry e;
    e.id = require_string(obj, "id", where);
    if (e.id.empty()) throw ValidationError(where + ": empty id");
    if (!seen_ids.insert(e.id).second) throw ValidationError(where + ": duplicate id \"" + e.id + "\"");

    std::filesystem::path emb = require_string(obj, "embedding", where);
    e.embedding_path = emb.is_absolute() ? emb : base / emb;
    if (obj.contains("waveform")) {
      std::filesystem::path wav = require_string(obj, "waveform", where);
      e.waveform_path = wav.is_absolute() ? wav : base / wav;
    }

    e.intelligibility = require_number(obj, "intelligibility", where);
    check_unit_range(e.intelligibility, "intelligibility", where);
    e.cer_whisper = require_number(obj, "cer_whisper", where);
    e.cer_google = require_number(obj, "cer_google", where);
    if (e.cer_whisper < 0.0) throw ValidationError(where + ": negative cer_whisper");
    if (e.cer_google < 0.0) throw ValidationError(where + ": negative cer_google");
    e.stoi = require_number(obj, "stoi", where);
    check_unit_range(e.stoi, "stoi", where);
    e.split = parse_split(require_string(obj, "split", where));

    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw ValidationError(path.string() + ": manifest has no entries");
  return entries;
}

void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write manifest: " + path.string());
  for (const ManifestEntry& e : entries) {
    out << "{\"id\":\"" << escape_json(e.id) << "\""
        << ",\"embedding\":\"" << escape_json(e.embedding_path.generic_string()) << "\"";
    if (e.waveform_path)
      out << ",\"waveform\":\"" << escape_json(e.waveform_path->generic_string()) << "\"";
    out << ",\"intelligibility\":" << format_double(e.intelligibility)
        << ",\"cer_whisper\":" << format_double(e.cer_whisper)
        << ",\"cer_google\":" << format_double(e.cer_google)
        << ",\"stoi\":" << format_double(e.stoi)
        << ",\"split\":\"" << split_name(e.split) << "\"}\n";
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

double invert_cer(double cer) {
  if (!(cer >= 0.0)) throw ValidationError(strf("invert_cer: cer = %g must be >= 0", cer));
  return std::max(0.0, 1.0 - cer);
}

}  // namespace imti
