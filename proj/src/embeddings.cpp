#include <bit>
#include <cstring>
#include <json.hpp>

#include "conceptscope/corpus_io.hpp"
#include "conceptscope/csv.hpp"
#include "conceptscope/error.hpp"

namespace conceptscope {

namespace fs = std::filesystem;
static_assert(std::endian::native == std::endian::little, "embedding files are little-endian");

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != rows_ * dim_) {
    throw Error(ErrorKind::invalid_input, "embedding matrix holds " + std::to_string(values_.size()) +
                                              " values, expected " + std::to_string(rows_ * dim_));
  }
}

namespace {

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".json"); }

}  // namespace

EmbeddingMatrix load_embeddings(const fs::path& path) {
  std::ifstream header(sidecar_path(path));
  if (!header) throw Error(ErrorKind::io, "cannot open " + sidecar_path(path).string());
  std::size_t count = 0, dim = 0;
  try {
    auto doc = nlohmann::json::parse(header);
    count = doc.at("count").get<std::size_t>();
    dim = doc.at("dim").get<std::size_t>();
    if (doc.at("dtype").get<std::string>() != "f32") {
      throw Error(ErrorKind::parse, sidecar_path(path).string() + ": unsupported dtype");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, sidecar_path(path).string() + ": " + e.what());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<float> values(count * dim);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != values.size() * sizeof(float)) {
    throw Error(ErrorKind::integrity, path.string() + ": truncated embedding file");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::integrity, path.string() + ": trailing bytes after " +
                                          std::to_string(count) + " rows");
  }
  return EmbeddingMatrix(count, dim, std::move(values));
}

void save_embeddings(const EmbeddingMatrix& matrix, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(matrix.values().data()),
            static_cast<std::streamsize>(matrix.values().size() * sizeof(float)));
  std::ofstream header(sidecar_path(path));
  header << nlohmann::json{{"count", matrix.rows()}, {"dim", matrix.dim()}, {"dtype", "f32"}}.dump()
         << '\n';
  if (!out || !header) throw Error(ErrorKind::io, "write failure on " + path.string());
}

std::vector<std::string> load_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::string> labels;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto label = trim(line);
    if (label.empty()) {
      // a trailing newline at EOF is fine; interior blanks would shift rows
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": blank label");
    }
    labels.emplace_back(label);
  }
  return labels;
}

}  // namespace conceptscope
