#pragma once

#include <string>
#include <vector>

#include "toporel/batching.hpp"
#include "toporel/common.hpp"
#include "toporel/geometry.hpp"

namespace toporel {

// 17 significant digits: lossless double -> text -> double round trip.
std::string format_double(double v);

// Header line `dim=<m>`, then one row of m comma-separated floats per sample.
void write_latent_batch_csv(const std::string& path, const Matrix& batch);
Matrix read_latent_batch_csv(const std::string& path);

// Header line `dim=<m>,id`; data rows carry the id first, then m floats.
void write_anchor_set_csv(const std::string& path, const AnchorSet& anchors);
AnchorSet read_anchor_set_csv(const std::string& path);

// Header `label,x0,...`, one integer label plus features per row.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

// Single integer per line; a leading `label` header line is tolerated.
std::vector<int> read_labels_file(const std::string& path);

}  // namespace toporel
