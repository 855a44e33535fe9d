#include "snrml/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace snrml {

namespace {

[[noreturn]] void data_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorCategory::Data, "csv line " + std::to_string(line) + ": " + msg);
}

/// Splits one CSV record; double quotes group commas, "" is a literal quote.
std::vector<std::string> split_record(const std::string& line, std::size_t lineno) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  if (quoted) data_error(lineno, "unterminated quoted field");
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

LabeledBatch gather(const LabeledBatch& src, const std::vector<std::size_t>& idx) {
  LabeledBatch out{Matrix(idx.size(), src.embeddings.cols()), {}};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto row = src.embeddings.row(idx[k]);
    std::copy(row.begin(), row.end(), out.embeddings.row(k).begin());
    out.labels.push_back(src.labels[idx[k]]);
  }
  return out;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const DatasetSpec& spec) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_record(line, lineno);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCategory::Data, "csv: missing header row");

  CsvTable table;
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == spec.label_column) {
      label_col = c;
    } else {
      table.feature_names.push_back(name);
    }
  }
  if (label_col == header.size()) {
    data_error(lineno, "header has no label column '" + spec.label_column + "'");
  }
  if (table.feature_names.empty()) data_error(lineno, "header declares no feature columns");

  std::map<std::string, int> label_ids;
  std::vector<Vector> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_record(line, lineno);
    if (cells.size() != header.size()) {
      data_error(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(cells.size()));
    }
    Vector features;
    features.reserve(table.feature_names.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) continue;
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        data_error(lineno, "column '" + trim(header[c]) + "' is not a finite number: '" + cell + "'");
      }
      features.push_back(v);
    }
    std::vector<std::string> names;
    if (spec.multi_label) {
      std::stringstream ss(cells[label_col]);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) names.push_back(item);
      }
    } else {
      const std::string name = trim(cells[label_col]);
      if (!name.empty()) names.push_back(name);
    }
    if (names.empty()) data_error(lineno, "empty label");
    std::vector<int> ids;
    for (const auto& name : names) {
      auto [it, inserted] = label_ids.emplace(name, static_cast<int>(table.label_names.size()));
      if (inserted) table.label_names.push_back(name);
      ids.push_back(it->second);
    }
    rows.push_back(std::move(features));
    table.data.labels.push_back(make_label_set(std::move(ids)));
  }
  if (rows.empty()) throw Error(ErrorCategory::Data, "csv: no data rows");
  table.data.embeddings = Matrix::from_rows(rows);
  return table;
}

CsvTable ingest_csv(const std::string& path, const DatasetSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Data, "cannot open dataset " + path);
  return parse_csv(in, spec);
}

namespace {

Dataset generate_classes(const DatasetSpec& spec, SeededRng& rng, bool fig1) {
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    centers.push_back(fig1 ? sample_gaussian(rng, spec.dim, 0.0, 1.0)
                           : sample_gaussian(rng, spec.dim, 0.0, spec.separation * spec.separation));
  }
  const double within = fig1 ? spec.sigma2 : spec.noise * spec.noise;
  Dataset ds;
  auto fill = [&](LabeledBatch& split, std::vector<std::string>& ids, std::size_t per_class,
                  const char* prefix) {
    std::vector<Vector> rows;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t k = 0; k < per_class; ++k) {
        Vector x = sample_gaussian(rng, spec.dim, 0.0, within);
        for (std::size_t d = 0; d < x.size(); ++d) x[d] += centers[c][d];
        rows.push_back(std::move(x));
        split.labels.push_back({static_cast<int>(c)});
        ids.push_back(std::string(prefix) + std::to_string(ids.size()));
      }
    }
    split.embeddings = Matrix::from_rows(rows);
  };
  fill(ds.train, ds.train_ids, spec.train_per_class, "train");
  fill(ds.test, ds.test_ids, spec.test_per_class, "test");
  return ds;
}

}  // namespace

Dataset make_blobs(const DatasetSpec& spec, SeededRng& rng) {
  return generate_classes(spec, rng, false);
}

Dataset make_fig1_classes(const DatasetSpec& spec, SeededRng& rng) {
  return generate_classes(spec, rng, true);
}

Dataset split_table(const CsvTable& table, const DatasetSpec& spec, SeededRng& rng) {
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < table.data.size(); ++i) {
    strata[table.data.labels[i].front()].push_back(i);
  }
  std::vector<bool> is_train(table.data.size(), false);
  for (auto& [label, members] : strata) {
    rng.shuffle(members);
    const auto take = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < std::min(take, members.size()); ++k) is_train[members[k]] = true;
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < is_train.size(); ++i) (is_train[i] ? train_idx : test_idx).push_back(i);
  Dataset ds{gather(table.data, train_idx), gather(table.data, test_idx), {}, {}};
  for (std::size_t i : train_idx) ds.train_ids.push_back("row" + std::to_string(i));
  for (std::size_t i : test_idx) ds.test_ids.push_back("row" + std::to_string(i));
  if (ds.train.size() < 2 || ds.test.size() < 2) {
    throw Error(ErrorCategory::Data, "dataset split leaves fewer than 2 rows in a split");
  }
  return ds;
}

Dataset load_dataset(const DatasetSpec& spec, SeededRng& rng) {
  switch (spec.source) {
    case DatasetSource::Blobs: return make_blobs(spec, rng);
    case DatasetSource::Fig1: return make_fig1_classes(spec, rng);
    case DatasetSource::Csv: return split_table(ingest_csv(spec.path, spec), spec, rng);
  }
  throw Error(ErrorCategory::Config, "unknown dataset source");
}

void write_embeddings_csv(std::ostream& out, const Matrix& embeddings,
                          const std::vector<LabelSet>& labels,
                          const std::vector<std::string>& ids) {
  out << "id,label";
  for (std::size_t d = 0; d < embeddings.cols(); ++d) out << ",e" << d;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    out << ids[r] << ",\"";
    for (std::size_t k = 0; k < labels[r].size(); ++k) out << (k ? "," : "") << labels[r][k];
    out << '"';
    for (double v : embeddings.row(r)) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace snrml
