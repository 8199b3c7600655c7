#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace mildmix {

/// %.17g; lossless for doubles. Non-finite values print as nan / inf / -inf.
std::string format_double(double v);

/// Column-oriented CSV builder; every cell is preformatted text.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row();
  CsvTable& cell(double v);
  CsvTable& cell(std::int64_t v);
  CsvTable& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  CsvTable& cell(const std::string& v);

  std::size_t size() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Two-space indented JSON with a trailing newline.
std::string dump_json(const nlohmann::json& j);

/// Throws file_io on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mildmix
