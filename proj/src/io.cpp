#include "suscept/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <system_error>

#include "suscept/error.hpp"

namespace suscept {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NoProfilePosts: return "NoProfilePosts";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownPost: return "UnknownPost";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::BadArchitecture: return "BadArchitecture";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NoScorablePosts: return "NoScorablePosts";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateGroup: return "DegenerateGroup";
    case ErrorCode::UnknownFactor: return "UnknownFactor";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body,
                       bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot rename onto " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) { return fmt::format("{}", value); }

}  // namespace suscept
