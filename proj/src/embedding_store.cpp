#include "suscept/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "suscept/error.hpp"
#include "suscept/io.hpp"

namespace suscept {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint64_t uint(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }

  std::string take(std::size_t n) {
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

EmbeddingTable::EmbeddingTable(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::DimMismatch, "embedding dimension must be positive");
}

void EmbeddingTable::insert(std::string id, std::vector<float> vector) {
  if (id.empty()) throw Error(ErrorCode::DuplicateId, "empty embedding id");
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimMismatch,
                "vector for " + id + " has " + std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dim_));
  }
  for (float x : vector) {
    if (!std::isfinite(x)) throw Error(ErrorCode::BadConfig, "non-finite component in vector for " + id);
  }
  if (entries_.count(id)) throw Error(ErrorCode::DuplicateId, "duplicate embedding id " + id);
  entries_.emplace(std::move(id), std::move(vector));
}

const std::vector<float>* EmbeddingTable::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingTable load_table(const std::filesystem::path& path) {
  const std::string bytes = read_file(path, true);
  Reader r(bytes);
  if (!r.has(4) || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an EMB1 file");
  }
  r.take(4);
  if (!r.has(12)) throw Error(ErrorCode::TruncatedRecord, "truncated EMB1 header in " + path.string());
  const auto dim = static_cast<std::uint32_t>(r.uint(4));
  const auto count = r.uint(8);
  if (dim == 0) throw Error(ErrorCode::DimMismatch, "EMB1 header declares dim 0");

  EmbeddingTable table(dim);
  for (std::uint64_t k = 0; k < count; ++k) {
    if (!r.has(4)) throw Error(ErrorCode::TruncatedRecord, "record " + std::to_string(k) + " is truncated");
    const auto len = r.uint(4);
    if (!r.has(len)) throw Error(ErrorCode::TruncatedRecord, "record " + std::to_string(k) + " id is truncated");
    std::string id = r.take(len);
    if (!r.has(std::size_t{4} * dim)) {
      throw Error(ErrorCode::TruncatedRecord, "record " + std::to_string(k) + " (" + id + ") vector is truncated");
    }
    std::vector<float> v(dim);
    for (auto& x : v) x = std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4)));
    table.insert(std::move(id), std::move(v));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::DimMismatch, "trailing bytes after " + std::to_string(count) + " records");
  }
  return table;
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::string buf(kMagic, 4);
  put_u32(buf, table.dim());
  put_u64(buf, table.size());
  // std::map orders std::string keys by bytes, which is the on-disk order.
  for (const auto& [id, v] : table.entries()) {
    put_u32(buf, static_cast<std::uint32_t>(id.size()));
    buf += id;
    for (float x : v) put_u32(buf, std::bit_cast<std::uint32_t>(x));
  }
  write_file_atomic(path, [&](std::ostream& out) { out.write(buf.data(), static_cast<std::streamsize>(buf.size())); }, true);
}

void ProfileConfig::validate() const {
  if (window_days < 1) throw Error(ErrorCode::BadConfig, "window_days must be >= 1");
  if (source_kinds.empty()) throw Error(ErrorCode::BadConfig, "profile source kinds must not be empty");
}

std::vector<double> user_profile_embedding(const Corpus& corpus, const EmbeddingTable& table,
                                           const std::string& user_id, Timestamp ref_time,
                                           const ProfileConfig& cfg) {
  if (!corpus.find_user(user_id)) throw Error(ErrorCode::DanglingReference, "unknown user " + user_id);
  const Timestamp lo = ref_time - cfg.window_days * kSecondsPerDay;
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t n = 0;
  for (auto i : corpus.interactions_of_user(user_id)) {
    const auto& it = corpus.interactions()[i];
    if (!cfg.source_kinds.count(it.kind) || it.created_at < lo || it.created_at >= ref_time) continue;
    const auto* v = table.find(it.post_id);
    if (!v) throw Error(ErrorCode::MissingEmbedding, "no embedding for post " + it.post_id);
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += (*v)[d];
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoProfilePosts, "user " + user_id + " has no posts in the profile window");
  for (auto& x : sum) x /= static_cast<double>(n);
  return sum;
}

std::vector<double> to_double(std::span<const float> values) { return {values.begin(), values.end()}; }

FeatureStore::FeatureStore(const Corpus& corpus, const EmbeddingTable& table, ProfileConfig cfg)
    : corpus_(corpus), table_(table), cfg_(std::move(cfg)) {}

const std::vector<double>* FeatureStore::profile(const std::string& user_id, const std::string& post_id) {
  auto key = std::make_pair(user_id, post_id);
  auto it = profiles_.find(key);
  if (it == profiles_.end()) {
    const Post* post = corpus_.find_post(post_id);
    if (!post) throw Error(ErrorCode::UnknownPost, "unknown post " + post_id);
    std::pair<bool, std::vector<double>> entry{false, {}};
    try {
      entry.second = user_profile_embedding(corpus_, table_, user_id, post->created_at, cfg_);
      entry.first = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoProfilePosts) throw;
    }
    it = profiles_.emplace(std::move(key), std::move(entry)).first;
  }
  return it->second.first ? &it->second.second : nullptr;
}

const std::vector<double>* FeatureStore::post(const std::string& post_id) {
  auto it = posts_.find(post_id);
  if (it == posts_.end()) {
    const auto* v = table_.find(post_id);
    std::pair<bool, std::vector<double>> entry{v != nullptr, v ? to_double(*v) : std::vector<double>{}};
    it = posts_.emplace(post_id, std::move(entry)).first;
  }
  return it->second.first ? &it->second.second : nullptr;
}

}  // namespace suscept
