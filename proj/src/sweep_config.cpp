#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "bytes.hpp"
#include "pohlab/eval.hpp"

namespace pohlab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw UsageError("sweep config line " + std::to_string(line) + ": " + what);
}

std::vector<double> number_list(const std::string& text, int line) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) fail(line, "bad number '" + item + "'");
    } catch (const std::logic_error&) {
      fail(line, "bad number '" + item + "'");
    }
  }
  if (out.empty()) fail(line, "empty list");
  return out;
}

double number(const std::string& text, int line) {
  const auto v = number_list(text, line);
  if (v.size() != 1) fail(line, "expected a single number");
  return v.front();
}

int integer(const std::string& text, int line) {
  const double v = number(text, line);
  if (v != static_cast<double>(static_cast<int>(v))) fail(line, "expected an integer");
  return static_cast<int>(v);
}

MethodKind method_kind(const std::string& name, int line) {
  static const std::map<std::string, MethodKind> kinds = {
      {"identity", MethodKind::kIdentity},     {"pcm", MethodKind::kPcm},
      {"bitplane", MethodKind::kBitPlane},     {"dct-flat", MethodKind::kDctFlat},
      {"dct-default", MethodKind::kDctDefault}, {"unwrap-dct", MethodKind::kUnwrapDct}};
  auto it = kinds.find(name);
  if (it == kinds.end()) fail(line, "unknown method '" + name + "'");
  return it->second;
}

}  // namespace

SweepConfig parse_sweep_config(const std::string& text) {
  SweepConfig cfg;
  cfg.depths = log_spaced_depths();
  // External methods are assembled from several keys and appended in first-seen order.
  std::vector<std::string> external_order;
  std::map<std::string, MethodSpec> externals;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));

    if (key == "scene") {
      cfg.scene = value;
    } else if (key == "size") {
      cfg.size = integer(value, line);
    } else if (key == "depths") {
      if (value.rfind("log", 0) == 0) {
        std::istringstream ss(value.substr(3));
        int n = 0;
        double lo = 0, hi = 0;
        if (!(ss >> n >> lo >> hi)) fail(line, "expected 'log <count> <min> <max>'");
        cfg.depths = log_spaced_depths(n, lo, hi);
      } else {
        cfg.depths = number_list(value, line);
      }
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (double s : number_list(value, line)) {
        if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s))) {
          fail(line, "seeds must be non-negative integers");
        }
        cfg.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else if (key == "threshold") {
      cfg.threshold = number(value, line);
    } else if (key == "iterations") {
      cfg.iterations = integer(value, line);
    } else if (key == "feedback") {
      cfg.feedback = number(value, line);
    } else if (key == "dilation") {
      cfg.dilation = integer(value, line);
    } else if (key == "threads") {
      cfg.threads = integer(value, line);
    } else if (key == "method") {
      const auto colon = value.find(':');
      MethodSpec m;
      m.kind = method_kind(trim(value.substr(0, colon)), line);
      if (colon != std::string::npos) m.ladder = number_list(value.substr(colon + 1), line);
      if (m.kind != MethodKind::kIdentity && m.ladder.empty()) fail(line, "method needs a ladder");
      cfg.methods.push_back(std::move(m));
    } else if (key.rfind("external.", 0) == 0) {
      const auto dot = key.rfind('.');
      if (dot <= 9) fail(line, "expected external.<name>.<field>");
      const std::string name = key.substr(9, dot - 9);
      const std::string field = key.substr(dot + 1);
      if (!externals.count(name)) {
        external_order.push_back(name);
        externals[name].kind = MethodKind::kExternal;
        externals[name].name = name;
      }
      auto& m = externals[name];
      if (field == "encode") {
        m.encode_command = value;
      } else if (field == "decode") {
        m.decode_command = value;
      } else if (field == "rates") {
        m.ladder = number_list(value, line);
      } else {
        fail(line, "unknown external field '" + field + "'");
      }
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  for (const auto& name : external_order) cfg.methods.push_back(externals[name]);
  cfg.validate();
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_sweep_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace pohlab
