#include "ascii/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ascii/wire.hpp"

namespace ascii {

void Dataset::validate() const {
  features.validate();
  labels.validate();
  if (labels.size() != features.rows || sample_ids.size() != features.rows)
    throw std::invalid_argument("Dataset: rows, labels and ids must align");
  std::set<std::string> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second)
      throw std::invalid_argument("Dataset: duplicate sample id '" + id + "'");
  }
}

void BlobSpec::validate() const {
  if (n == 0) throw std::invalid_argument("BlobSpec: n must be positive");
  if (informative < 1)
    throw std::invalid_argument("BlobSpec: need at least one informative feature");
  if (redundant < 0) throw std::invalid_argument("BlobSpec: redundant must be >= 0");
  if (classes < 2) throw std::invalid_argument("BlobSpec: need at least two classes");
  if (!(cluster_std > 0.0))
    throw std::invalid_argument("BlobSpec: cluster_std must be positive");
  if (!(center_min < center_max))
    throw std::invalid_argument("BlobSpec: center box must be non-empty");
}

std::string zero_padded_id(size_t index, size_t n) {
  size_t width = 1;
  for (size_t v = n > 0 ? n - 1 : 0; v >= 10; v /= 10) ++width;
  std::string s = std::to_string(index);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

Dataset generate_blobs(const BlobSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int d_inf = spec.informative;
  const int d_all = spec.informative + spec.redundant;
  const int K = spec.classes;

  // One center per class, then samples interleaved by class so class sizes
  // stay balanced within one.
  std::vector<double> centers(static_cast<size_t>(K) * d_inf);
  for (double& c : centers) c = rng.uniform(spec.center_min, spec.center_max);

  Dataset out;
  out.features.rows = spec.n;
  out.features.cols = static_cast<size_t>(d_all);
  out.features.values.resize(spec.n * static_cast<size_t>(d_all));
  out.features.column_names.reserve(static_cast<size_t>(d_all));
  for (int j = 0; j < d_all; ++j)
    out.features.column_names.push_back("x" + std::to_string(j + 1));
  out.labels.num_classes = K;
  out.labels.labels.resize(spec.n);
  out.sample_ids.resize(spec.n);

  for (size_t i = 0; i < spec.n; ++i) {
    int cls = static_cast<int>(i % static_cast<size_t>(K)) + 1;
    out.labels.labels[i] = cls;
    out.sample_ids[i] = zero_padded_id(i, spec.n);
    const double* c = centers.data() + static_cast<size_t>(cls - 1) * d_inf;
    for (int j = 0; j < d_inf; ++j)
      out.features.at(i, static_cast<size_t>(j)) = c[j] + spec.cluster_std * rng.normal();
    for (int j = d_inf; j < d_all; ++j)
      out.features.at(i, static_cast<size_t>(j)) = rng.normal();
  }
  out.validate();
  return out;
}

std::vector<std::vector<size_t>> make_column_assignments(size_t cols,
                                                         const PartitionSpec& spec) {
  if (spec.strategy == PartitionStrategy::explicit_sets) {
    if (spec.assignments.empty())
      throw std::invalid_argument("partition: explicit strategy needs assignments");
    std::set<size_t> seen;
    for (const auto& set : spec.assignments) {
      if (set.empty())
        throw std::invalid_argument("partition: every agent needs at least one column");
      for (size_t c : set) {
        if (c >= cols)
          throw std::invalid_argument("partition: column index out of range");
        if (!seen.insert(c).second)
          throw std::invalid_argument("partition: column assigned to two agents");
      }
    }
    return spec.assignments;
  }

  if (spec.agents < 1)
    throw std::invalid_argument("partition: need at least one agent");
  size_t m = static_cast<size_t>(spec.agents);
  if (cols < m)
    throw std::invalid_argument("partition: fewer columns than agents");

  std::vector<size_t> order(cols);
  std::iota(order.begin(), order.end(), size_t{0});
  if (spec.strategy == PartitionStrategy::random) {
    Rng rng(spec.seed);
    rng.shuffle(order);
  }

  // Contiguous blocks of the (possibly permuted) column order, remainder
  // spread over the earlier agents.
  std::vector<std::vector<size_t>> sets(m);
  size_t base = cols / m, extra = cols % m, pos = 0;
  for (size_t a = 0; a < m; ++a) {
    size_t take = base + (a < extra ? 1 : 0);
    sets[a].assign(order.begin() + pos, order.begin() + pos + take);
    pos += take;
  }
  return sets;
}

Dataset select_columns(const Dataset& data, const std::vector<size_t>& columns) {
  data.validate();
  Dataset out;
  out.labels = data.labels;
  out.sample_ids = data.sample_ids;
  out.label_name = data.label_name;
  out.features.rows = data.rows();
  out.features.cols = columns.size();
  out.features.values.resize(data.rows() * columns.size());
  for (size_t c : columns)
    if (c >= data.cols())
      throw std::invalid_argument("select_columns: column index out of range");
  if (!data.features.column_names.empty()) {
    out.features.column_names.reserve(columns.size());
    for (size_t c : columns)
      out.features.column_names.push_back(data.features.column_names[c]);
  }
  for (size_t i = 0; i < data.rows(); ++i)
    for (size_t j = 0; j < columns.size(); ++j)
      out.features.at(i, j) = data.features.at(i, columns[j]);
  return out;
}

std::vector<Dataset> partition_vertical(const Dataset& data,
                                        const PartitionSpec& spec) {
  auto sets = make_column_assignments(data.cols(), spec);
  std::vector<Dataset> out;
  out.reserve(sets.size());
  for (const auto& set : sets) out.push_back(select_columns(data, set));
  return out;
}

Dataset select_rows(const Dataset& data, const std::vector<size_t>& rows) {
  Dataset out;
  out.labels.num_classes = data.labels.num_classes;
  out.label_name = data.label_name;
  out.features.rows = rows.size();
  out.features.cols = data.cols();
  out.features.column_names = data.features.column_names;
  out.features.values.resize(rows.size() * data.cols());
  out.labels.labels.reserve(rows.size());
  out.sample_ids.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    size_t r = rows[i];
    std::copy(data.features.values.begin() + r * data.cols(),
              data.features.values.begin() + (r + 1) * data.cols(),
              out.features.values.begin() + i * data.cols());
    out.labels.labels.push_back(data.labels.labels[r]);
    out.sample_ids.push_back(data.sample_ids[r]);
  }
  return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double fraction,
                                             uint64_t seed) {
  data.validate();
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_train_test: fraction must be in (0, 1)");
  const size_t n = data.rows();
  size_t n_train = static_cast<size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n)
    throw std::invalid_argument("split_train_test: split leaves a side empty");

  // The permutation depends only on (n, seed), never on feature values, so
  // the same seed splits every vertical slice identically.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(mix_seed(seed, {0x73706c69u}));  // split stream
  rng.shuffle(order);

  std::vector<size_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<size_t> test_rows(order.begin() + n_train, order.end());
  return {select_rows(data, train_rows), select_rows(data, test_rows)};
}

Dataset bootstrap_resample(const Dataset& data, uint64_t seed) {
  data.validate();
  const size_t n = data.rows();
  Rng rng(mix_seed(seed, {0x626f6f74u}));  // bootstrap stream
  std::vector<size_t> rows(n);
  for (size_t i = 0; i < n; ++i) rows[i] = rng.index(n);
  Dataset out = select_rows(data, rows);
  for (size_t i = 0; i < n; ++i) out.sample_ids[i] = zero_padded_id(i, n);
  return out;
}

std::vector<std::pair<Dataset, Dataset>> bootstrap_replications(
    const Dataset& data, int count, double train_fraction, uint64_t seed) {
  if (count < 1)
    throw std::invalid_argument("bootstrap_replications: count must be >= 1");
  std::vector<std::pair<Dataset, Dataset>> out;
  out.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    uint64_t rep_seed = seed + static_cast<uint64_t>(k);
    Dataset resampled = bootstrap_resample(data, rep_seed);
    out.push_back(split_train_test(resampled, train_fraction, rep_seed));
  }
  return out;
}

namespace {
constexpr char kDatasetMagic[4] = {'A', 'D', 'S', '1'};
constexpr uint16_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kDatasetMagic, kDatasetMagic + 4);
  wire::put_u16(buf, kDatasetVersion);
  wire::put_u32(buf, static_cast<uint32_t>(data.rows()));
  wire::put_u32(buf, static_cast<uint32_t>(data.cols()));
  wire::put_i32(buf, data.labels.num_classes);
  wire::put_string(buf, data.label_name);
  wire::put_u32(buf, static_cast<uint32_t>(data.features.column_names.size()));
  for (const auto& name : data.features.column_names) wire::put_string(buf, name);
  for (const auto& id : data.sample_ids) wire::put_string(buf, id);
  for (int label : data.labels.labels) wire::put_i32(buf, label);
  for (double v : data.features.values) wire::put_f64(buf, v);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("save_dataset: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw ParseError("save_dataset: write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_dataset: cannot open " + path.string());
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
  wire::Reader r(buf);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kDatasetMagic))
    throw ParseError("load_dataset: bad magic in " + path.string());
  uint16_t version = r.u16();
  if (version != kDatasetVersion)
    throw ParseError("load_dataset: unsupported version " + std::to_string(version));
  Dataset out;
  uint32_t rows = r.u32();
  uint32_t cols = r.u32();
  out.labels.num_classes = r.i32();
  out.label_name = r.string();
  uint32_t names = r.u32();
  for (uint32_t i = 0; i < names; ++i)
    out.features.column_names.push_back(r.string());
  out.features.rows = rows;
  out.features.cols = cols;
  out.sample_ids.reserve(rows);
  for (uint32_t i = 0; i < rows; ++i) out.sample_ids.push_back(r.string());
  out.labels.labels.reserve(rows);
  for (uint32_t i = 0; i < rows; ++i) out.labels.labels.push_back(r.i32());
  out.features.values.resize(static_cast<size_t>(rows) * cols);
  for (double& v : out.features.values) v = r.f64();
  r.expect_end("dataset file");
  out.validate();
  return out;
}

}  // namespace ascii
