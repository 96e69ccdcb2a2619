#include "stratlca/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "stratlca/format.hpp"

namespace stratlca {

BandProfile classify_bands(const Eigen::Ref<const Vector>& theta_column,
                           const BandThresholds& bands) {
  bands.validate();
  BandProfile profile;
  for (Index d = 0; d < theta_column.size(); ++d) {
    const double v = theta_column[d];
    if (v > bands.hi) {
      profile.high.push_back(d);
    } else if (v >= bands.lo) {
      profile.moderate.push_back(d);
    } else {
      profile.low.push_back(d);
    }
  }
  return profile;
}

std::vector<Index> order_by_theta(const Eigen::Ref<const Vector>& theta_column,
                                  const std::vector<Index>& indices) {
  std::vector<Index> ordered = indices;
  std::stable_sort(ordered.begin(), ordered.end(), [&](Index a, Index b) {
    return theta_column[a] > theta_column[b];
  });
  return ordered;
}

namespace {

const LcaModel& model_of_group(const std::vector<LcaModel>& models, int group) {
  return models.at(static_cast<std::size_t>(group - 1));
}

std::vector<std::string> names_by_theta(const Eigen::Ref<const Vector>& column,
                                        const std::vector<Index>& indices,
                                        const ConditionCatalog& catalog) {
  std::vector<std::string> names;
  for (const Index d : order_by_theta(column, indices)) {
    names.push_back(catalog.names[static_cast<std::size_t>(d)]);
  }
  return names;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (const char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

std::string name_cluster_set(const ClusterSet& set,
                             const std::vector<LcaModel>& models,
                             const ConditionCatalog& catalog,
                             const BandThresholds& bands) {
  const auto [group, cluster] = set.members.front();
  const Vector column = model_of_group(models, group).theta.col(cluster);
  const BandProfile profile = classify_bands(column, bands);
  if (profile.high.empty()) {
    Index top = 0;
    for (Index d = 1; d < column.size(); ++d) {
      if (column[d] > column[top]) top = d;
    }
    return "~" + catalog.names[static_cast<std::size_t>(top)];
  }
  return "(" + join(names_by_theta(column, profile.high, catalog), ", ") + ")";
}

std::vector<ClusterSetReport> build_cluster_set_reports(
    const std::vector<ClusterSet>& sets, const std::vector<LcaModel>& models,
    const std::vector<Vector>& fractions, const ConditionCatalog& catalog,
    const BandThresholds& bands) {
  const int g_count = static_cast<int>(models.size());
  std::vector<ClusterSetReport> reports;
  reports.reserve(sets.size());
  for (const auto& set : sets) {
    ClusterSetReport row;
    row.id = set.id;
    row.name = name_cluster_set(set, models, catalog, bands);
    row.first_group = set.first_group();
    row.last_group = set.last_group();
    row.singleton = set.singleton;
    const auto [group, cluster] = set.members.front();
    const Vector column = model_of_group(models, group).theta.col(cluster);
    const BandProfile profile = classify_bands(column, bands);
    row.high = names_by_theta(column, profile.high, catalog);
    row.moderate = names_by_theta(column, profile.moderate, catalog);
    row.group_fraction.assign(static_cast<std::size_t>(g_count),
                              std::numeric_limits<double>::quiet_NaN());
    for (const auto& [g, k] : set.members) {
      row.group_fraction[static_cast<std::size_t>(g - 1)] =
          fractions.at(static_cast<std::size_t>(g - 1))[k];
    }
    reports.push_back(std::move(row));
  }
  return reports;
}

void write_cluster_set_csv(std::ostream& out,
                           const std::vector<ClusterSetReport>& reports,
                           int group_count, bool split_moderate,
                           const std::vector<LcaModel>* models,
                           const std::vector<ClusterSet>* sets,
                           const ConditionCatalog* catalog,
                           const BandThresholds& bands) {
  out << "set_id,name,high,";
  out << (split_moderate ? "moderate_upper,moderate_lower," : "moderate,");
  out << "singleton";
  for (int g = 1; g <= group_count; ++g) out << ",g" << g;
  out << '\n';

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& row = reports[i];
    out << row.id << ',' << csv_escape(row.name) << ',' << join(row.high, ";") << ',';
    if (split_moderate) {
      // Supplement-style split of the moderate band at 0.5.
      const auto& set = sets->at(i);
      const auto [group, cluster] = set.members.front();
      const Vector column =
          model_of_group(*models, group).theta.col(cluster);
      const BandProfile profile = classify_bands(column, bands);
      std::vector<Index> upper;
      std::vector<Index> lower;
      for (const Index d : profile.moderate) {
        (column[d] >= 0.5 ? upper : lower).push_back(d);
      }
      out << join(names_by_theta(column, upper, *catalog), ";") << ','
          << join(names_by_theta(column, lower, *catalog), ";") << ',';
    } else {
      out << join(row.moderate, ";") << ',';
    }
    out << (row.singleton ? "true" : "false");
    for (int g = 1; g <= group_count; ++g) {
      const double f = row.group_fraction[static_cast<std::size_t>(g - 1)];
      out << ',';
      if (!std::isnan(f)) out << to_fixed(f * 100.0, 2);
    }
    out << '\n';
  }
}

Summary summarize(const std::vector<ClusterSet>& sets, int group_count) {
  Summary s;
  s.singleton_per_group.assign(static_cast<std::size_t>(group_count), 0);
  for (const auto& set : sets) {
    if (set.singleton) {
      ++s.singleton;
      ++s.singleton_per_group[static_cast<std::size_t>(set.first_group() - 1)];
    } else {
      ++s.non_singleton;
    }
    ++s.span_histogram[set.span()];
  }
  return s;
}

void write_summary_json(std::ostream& out, const Summary& summary) {
  out << "{\n";
  out << "  \"total\": " << summary.singleton + summary.non_singleton << ",\n";
  out << "  \"singleton\": " << summary.singleton << ",\n";
  out << "  \"non_singleton\": " << summary.non_singleton << ",\n";
  out << "  \"span_histogram\": {";
  bool first = true;
  for (const auto& [span, count] : summary.span_histogram) {
    if (!first) out << ", ";
    out << "\"" << span << "\": " << count;
    first = false;
  }
  out << "},\n";
  out << "  \"singleton_per_group\": [";
  for (std::size_t g = 0; g < summary.singleton_per_group.size(); ++g) {
    if (g > 0) out << ", ";
    out << summary.singleton_per_group[g];
  }
  out << "]\n}\n";
}

void write_dot(std::ostream& out, const AlignmentChain& chain) {
  out << "graph cluster_similarity {\n";
  out << "  rankdir=LR;\n";
  for (int g = 1; g <= chain.group_count(); ++g) {
    out << "  subgraph cluster_g" << g << " {\n";
    out << "    label=\"G" << g << "\";\n";
    out << "    rank=same;\n";
    const Index k_g = chain.cluster_counts[static_cast<std::size_t>(g - 1)];
    for (Index k = 0; k < k_g; ++k) {
      out << "    \"G" << g << ":C" << k << "\";\n";
    }
    out << "  }\n";
  }
  for (std::size_t g = 0; g < chain.matches.size(); ++g) {
    for (const auto& m : chain.matches[g]) {
      out << "  \"G" << g + 1 << ":C" << m.from << "\" -- \"G" << g + 2 << ":C"
          << m.to << "\" [weight=" << to_sig12(m.similarity) << "];\n";
    }
  }
  out << "}\n";
}

void write_graphml(std::ostream& out, const AlignmentChain& chain) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  out << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n";
  out << "  <key id=\"group\" for=\"node\" attr.name=\"group\" attr.type=\"int\"/>\n";
  out << "  <graph id=\"cluster_similarity\" edgedefault=\"undirected\">\n";
  for (int g = 1; g <= chain.group_count(); ++g) {
    const Index k_g = chain.cluster_counts[static_cast<std::size_t>(g - 1)];
    for (Index k = 0; k < k_g; ++k) {
      out << "    <node id=\"G" << g << ":C" << k << "\"><data key=\"group\">" << g
          << "</data></node>\n";
    }
  }
  for (std::size_t g = 0; g < chain.matches.size(); ++g) {
    for (const auto& m : chain.matches[g]) {
      out << "    <edge source=\"G" << g + 1 << ":C" << m.from << "\" target=\"G"
          << g + 2 << ":C" << m.to << "\"><data key=\"weight\">"
          << to_sig12(m.similarity) << "</data></edge>\n";
    }
  }
  out << "  </graph>\n</graphml>\n";
}

}  // namespace stratlca
