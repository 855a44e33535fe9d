#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "snrml/config.hpp"
#include "snrml/mining.hpp"
#include "snrml/numerics.hpp"

namespace snrml {

/// Rows of a CSV file: one feature vector and one label set per row, in file order.
struct CsvTable {
  LabeledBatch data;
  std::vector<std::string> feature_names;
  /// label_names[id] is the text of label id; ids follow first appearance.
  std::vector<std::string> label_names;
};

/// Reads a CSV file whose header names the feature columns and the label
/// column (`spec.label_column`). In multi-label mode the label cell is a
/// comma-separated set, quoted when it contains commas. Data errors name the
/// 1-based line number.
CsvTable ingest_csv(const std::string& path, const DatasetSpec& spec);
CsvTable parse_csv(std::istream& in, const DatasetSpec& spec);

struct Dataset {
  LabeledBatch train;
  LabeledBatch test;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Isotropic Gaussian classes: means ~ N(0, separation^2 I), samples ~ N(mean, noise^2 I).
Dataset make_blobs(const DatasetSpec& spec, SeededRng& rng);

/// Classes built around anchors ~ N(0, I); samples add N(0, sigma2 I) noise.
Dataset make_fig1_classes(const DatasetSpec& spec, SeededRng& rng);

/// Per-class shuffled split of `table` by spec.train_fraction (first label of
/// each row decides its stratum). Row order within each split is preserved.
Dataset split_table(const CsvTable& table, const DatasetSpec& spec, SeededRng& rng);

Dataset load_dataset(const DatasetSpec& spec, SeededRng& rng);

/// Writes "id,label,e0,e1,..." rows for external plotting.
void write_embeddings_csv(std::ostream& out, const Matrix& embeddings,
                          const std::vector<LabelSet>& labels,
                          const std::vector<std::string>& ids);

}  // namespace snrml
