#include "dqs/setup_text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace dqs {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    parts.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + sep.size();
  }
  return parts;
}

// "0.25pi", "pi", "5pi", "-0.5pi" in units of pi; a bare number is radians.
double parse_angle_pi(std::string_view s, std::string_view token) {
  s = trim(s);
  const bool pi_units = s.size() >= 2 && s.substr(s.size() - 2) == "pi";
  std::string_view num = pi_units ? trim(s.substr(0, s.size() - 2)) : s;
  if (pi_units && num.empty()) return 1.0;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
  if (ec != std::errc() || ptr != num.data() + num.size())
    throw SetupError("bad angle in token '" + std::string(token) + "'");
  return pi_units ? value : value / std::numbers::pi;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string path_name(int path) {
  if (path < 0 || path >= 26) throw SetupError("path index " + std::to_string(path) + " has no name");
  return std::string(1, static_cast<char>('a' + path));
}

int path_from_name(std::string_view name) {
  name = trim(name);
  if (name.size() != 1 || name[0] < 'a' || name[0] > 'z') throw SetupError("bad path name '" + std::string(name) + "'");
  return name[0] - 'a';
}

std::string format_device(const Device& d) {
  std::string out = kind_name(d.kind);
  out += '(';
  out += path_name(d.path_a);
  if (is_two_path(d.kind)) out += "," + path_name(d.path_b);
  if (has_angle(d.kind)) out += "," + format_number(d.angle_pi) + "pi";
  out += ')';
  return out;
}

Device parse_device(std::string_view token) {
  token = trim(token);
  const auto open = token.find('(');
  if (open == std::string_view::npos || token.back() != ')')
    throw SetupError("malformed device token '" + std::string(token) + "'");
  const DeviceKind kind = kind_from_name(std::string(trim(token.substr(0, open))));
  const auto args = split(token.substr(open + 1, token.size() - open - 2), ",");
  const std::size_t want = is_two_path(kind) ? 2 : (has_angle(kind) ? 2 : 1);
  if (args.size() != want)
    throw SetupError("device token '" + std::string(token) + "' expects " + std::to_string(want) + " arguments");

  Device d;
  d.kind = kind;
  d.path_a = path_from_name(args[0]);
  if (is_two_path(kind)) d.path_b = path_from_name(args[1]);
  if (has_angle(kind)) d.angle_pi = canonical_angle_pi(parse_angle_pi(args[1], token));
  return d;
}

std::string format_setup(const OpticalSetup& setup) {
  std::string out;
  auto append = [&out](const Device& d) {
    if (!out.empty()) out += " -> ";
    out += format_device(d);
  };
  for (const auto& s : setup.sources) append(s);
  for (const auto& d : setup.sequence) append(d);
  return out;
}

OpticalSetup parse_setup(std::string_view text) {
  OpticalSetup setup;
  for (auto token : split(trim(text), "->")) {
    if (token.empty()) throw SetupError("empty device token");
    Device d = parse_device(token);
    if (is_source(d.kind)) {
      if (!setup.sequence.empty())
        throw SetupError("source '" + std::string(token) + "' follows a sequence device");
      setup.sources.push_back(d);
    } else {
      setup.sequence.push_back(d);
    }
  }
  setup.n_photons = 2 * static_cast<int>(setup.sources.size());
  return setup;
}

OpticalSetup parse_sequence(std::string_view text, int n_photons, DeviceKind source_kind) {
  OpticalSetup setup;
  setup.n_photons = n_photons;
  setup.sources = consecutive_sources(n_photons, source_kind);
  text = trim(text);
  if (text.empty()) return setup;
  for (auto token : split(text, "->")) {
    Device d = parse_device(token);
    if (is_source(d.kind)) throw SetupError("source token '" + std::string(token) + "' in a sequence");
    setup.sequence.push_back(d);
  }
  return setup;
}

}  // namespace dqs
