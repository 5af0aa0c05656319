#include "toporel/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "toporel/fsutil.hpp"

namespace toporel {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw IoError("'" + path + "': cannot parse '" + s + "' as a number");
  }
  if (pos != s.size()) throw IoError("'" + path + "': trailing junk in '" + s + "'");
  if (!std::isfinite(v)) throw IoError("'" + path + "': non-finite value '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("'" + path + "': cannot parse '" + s + "' as an integer");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  const std::string contents = read_file(path);
  std::vector<std::string> lines;
  std::istringstream ss(contents);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

int parse_dim_header(const std::string& line, const std::string& path, bool expect_id) {
  const std::string suffix = expect_id ? ",id" : "";
  if (line.rfind("dim=", 0) != 0) {
    throw IoError("'" + path + "': expected 'dim=<m>" + suffix + "' header, got '" + line + "'");
  }
  std::string rest = line.substr(4);
  if (expect_id) {
    if (rest.size() < 3 || rest.compare(rest.size() - 3, 3, ",id") != 0) {
      throw IoError("'" + path + "': anchor header must end in ',id'");
    }
    rest = rest.substr(0, rest.size() - 3);
  }
  const int dim = parse_int(rest, path);
  if (dim < 1) throw IoError("'" + path + "': dim must be >= 1");
  return dim;
}

}  // namespace

void write_latent_batch_csv(const std::string& path, const Matrix& batch) {
  std::string out = "dim=" + std::to_string(batch.cols()) + "\n";
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
      if (c) out += ',';
      out += format_double(batch(r, c));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

Matrix read_latent_batch_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw IoError("'" + path + "': empty file");
  const int dim = parse_dim_header(lines[0], path, false);
  const int rows = static_cast<int>(lines.size()) - 1;
  if (rows < 1) throw IoError("'" + path + "': no data rows");
  Matrix m(rows, dim);
  for (int r = 0; r < rows; ++r) {
    const auto fields = split_line(lines[r + 1]);
    if (static_cast<int>(fields.size()) != dim) {
      throw IoError("'" + path + "': row " + std::to_string(r) + " has " +
                    std::to_string(fields.size()) + " fields, expected " + std::to_string(dim));
    }
    for (int c = 0; c < dim; ++c) m(r, c) = parse_double(fields[c], path);
  }
  return m;
}

void write_anchor_set_csv(const std::string& path, const AnchorSet& anchors) {
  std::string out = "dim=" + std::to_string(anchors.dim()) + ",id\n";
  for (int r = 0; r < anchors.count(); ++r) {
    out += std::to_string(anchors.ids[r]);
    for (int c = 0; c < anchors.dim(); ++c) {
      out += ',';
      out += format_double(anchors.anchors(r, c));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

AnchorSet read_anchor_set_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw IoError("'" + path + "': empty file");
  const int dim = parse_dim_header(lines[0], path, true);
  const int rows = static_cast<int>(lines.size()) - 1;
  if (rows < 1) throw IoError("'" + path + "': no anchors");
  AnchorSet a;
  a.anchors = Matrix(rows, dim);
  a.ids.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const auto fields = split_line(lines[r + 1]);
    if (static_cast<int>(fields.size()) != dim + 1) {
      throw IoError("'" + path + "': anchor row " + std::to_string(r) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(dim + 1));
    }
    a.ids[r] = parse_int(fields[0], path);
    for (int c = 0; c < dim; ++c) a.anchors(r, c) = parse_double(fields[c + 1], path);
  }
  return a;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::string out = "label";
  for (int c = 0; c < data.dim(); ++c) out += ",x" + std::to_string(c);
  out += '\n';
  for (int r = 0; r < data.size(); ++r) {
    out += std::to_string(data.labels[r]);
    for (int c = 0; c < data.dim(); ++c) {
      out += ',';
      out += format_double(data.inputs(r, c));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

Dataset read_dataset_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw IoError("'" + path + "': need a header and at least one row");
  const auto header = split_line(lines[0]);
  if (header.empty() || header[0] != "label") {
    throw IoError("'" + path + "': first column must be 'label'");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  if (dim < 1) throw IoError("'" + path + "': no feature columns");
  const int rows = static_cast<int>(lines.size()) - 1;
  Dataset data;
  data.inputs = Matrix(rows, dim);
  data.labels.resize(rows);
  int max_label = 0;
  for (int r = 0; r < rows; ++r) {
    const auto fields = split_line(lines[r + 1]);
    if (static_cast<int>(fields.size()) != dim + 1) {
      throw IoError("'" + path + "': row " + std::to_string(r) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(dim + 1));
    }
    data.labels[r] = parse_int(fields[0], path);
    if (data.labels[r] < 0) throw IoError("'" + path + "': negative label");
    max_label = std::max(max_label, data.labels[r]);
    for (int c = 0; c < dim; ++c) data.inputs(r, c) = parse_double(fields[c + 1], path);
  }
  data.num_classes = max_label + 1;
  return data;
}

std::vector<int> read_labels_file(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<int> labels;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == 0 && lines[i].rfind("label", 0) == 0) continue;
    labels.push_back(parse_int(split_line(lines[i])[0], path));
  }
  if (labels.empty()) throw IoError("'" + path + "': no labels");
  return labels;
}

}  // namespace toporel
