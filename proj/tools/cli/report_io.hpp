#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "mshift/report.hpp"

namespace mshift::cli {

// Writes JSON with every floating-point number at 17 significant digits;
// non-finite values become null.
std::string dump_json(const nlohmann::ordered_json& doc, int indent = 2);
void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& doc);

nlohmann::ordered_json check_to_json(const Check& c);
// Curves are listed by file name; the data goes to CSV.
nlohmann::ordered_json report_to_json(const LltReport& r, const std::string& curve_prefix);

// One CSV per curve: header "<x_label>,value[,stderr]". Returns the file names.
std::vector<std::string> write_curves(const std::filesystem::path& dir, const std::string& prefix,
                                      const std::vector<Curve>& curves);

std::string curve_file_name(const std::string& prefix, const Curve& c);

}  // namespace mshift::cli
