#include "report_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mshift/error.hpp"

namespace mshift::cli {
namespace {

std::string number_text(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const nlohmann::ordered_json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += pad;
        out += nlohmann::ordered_json(k).dump();
        out += indent > 0 ? ": " : ":";
        emit(v, indent, depth + 1, out);
      }
      out += close + '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      // Flat numeric arrays stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && v.is_primitive();
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat ? ", " : ",";
        if (!flat) out += pad;
        emit(j[i], indent, depth + 1, out);
      }
      out += flat ? "]" : close + ']';
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += number_text(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

std::string csv_cell(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& doc, int indent) {
  std::string out;
  emit(doc, indent, 0, out);
  out += '\n';
  return out;
}

void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& doc) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw InputError("cannot write " + file.string());
  os << dump_json(doc);
}

nlohmann::ordered_json check_to_json(const Check& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["pass"] = c.pass;
  j["measured"] = c.measured;
  j["tolerance"] = c.tolerance;
  j["relation"] = c.at_least ? ">=" : "<=";
  j["provenance"] = to_string(c.provenance);
  if (std::isfinite(c.std_error)) j["std_error"] = c.std_error;
  return j;
}

nlohmann::ordered_json report_to_json(const LltReport& r, const std::string& curve_prefix) {
  nlohmann::ordered_json j;
  if (!r.regime.empty()) j["regime"] = r.regime;
  j["pass"] = r.pass();
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_to_json(c));
  j["numbers"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.numbers) j["numbers"][k] = v;
  if (!r.labels.empty())
    for (const auto& [k, v] : r.labels) j["labels"][k] = v;
  j["curves"] = nlohmann::ordered_json::array();
  for (const auto& c : r.curves) j["curves"].push_back(curve_file_name(curve_prefix, c));
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

std::string curve_file_name(const std::string& prefix, const Curve& c) {
  std::string name = prefix.empty() ? c.name : prefix + "_" + c.name;
  for (char& ch : name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) ch = '_';
  return name + ".csv";
}

std::vector<std::string> write_curves(const std::filesystem::path& dir, const std::string& prefix,
                                      const std::vector<Curve>& curves) {
  std::vector<std::string> files;
  for (const auto& c : curves) {
    const auto name = curve_file_name(prefix, c);
    std::ofstream os(dir / name, std::ios::trunc);
    if (!os) throw InputError("cannot write " + (dir / name).string());
    const bool with_se = !c.se.empty();
    os << c.x_label << ",value" << (with_se ? ",stderr" : "") << '\n';
    for (std::size_t i = 0; i < c.y.size(); ++i) {
      os << csv_cell(i < c.x.size() ? c.x[i] : static_cast<double>(i)) << ',' << csv_cell(c.y[i]);
      if (with_se) os << ',' << csv_cell(i < c.se.size() ? c.se[i] : std::nan(""));
      os << '\n';
    }
    files.push_back(name);
  }
  return files;
}

}  // namespace mshift::cli
