#include "stratlca/model_io.hpp"

#include <fstream>
#include <ostream>

#include "json_util.hpp"

namespace stratlca {

void write_model_json(std::ostream& out, const StratumModelRecord& record) {
  const auto& model = record.fit.model;
  out << "{\n";
  out << "  \"group\": " << record.group << ",\n";
  out << "  \"age_range\": [" << record.age_lo << ", " << record.age_hi << "],\n";
  out << "  \"K\": " << model.components() << ",\n";
  out << "  \"pi\": ";
  jsonutil::write_vector(out, model.pi);
  out << ",\n";
  out << "  \"theta\": ";
  jsonutil::write_matrix_rows(out, model.theta);
  out << ",\n";
  out << "  \"log_likelihood\": " << to_sig12(record.fit.log_likelihood) << ",\n";
  out << "  \"bic\": " << to_sig12(record.fit.bic) << ",\n";
  out << "  \"seed\": " << record.fit.seed_used << ",\n";
  out << "  \"converged\": " << (record.fit.converged ? "true" : "false") << "\n";
  out << "}\n";
}

void write_model_json_file(const std::filesystem::path& path,
                           const StratumModelRecord& record) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  write_model_json(out, record);
}

StratumModelRecord read_model_json(std::istream& in, const std::string& source_name) {
  const auto j = jsonutil::parse_document(in, source_name);
  StratumModelRecord record;
  record.source = source_name;
  record.group = jsonutil::require<int>(j, source_name, "group");
  if (!j.contains("age_range") || !j.at("age_range").is_array() ||
      j.at("age_range").size() != 2) {
    jsonutil::fail(source_name, "\"age_range\" must be [lo, hi]");
  }
  record.age_lo = j.at("age_range")[0].get<int>();
  record.age_hi = j.at("age_range")[1].get<int>();
  const auto k = jsonutil::require<Index>(j, source_name, "K");
  if (!j.contains("pi")) jsonutil::fail(source_name, "missing \"pi\"");
  record.fit.model.pi = jsonutil::parse_vector(j.at("pi"), source_name, "pi");
  if (!j.contains("theta")) jsonutil::fail(source_name, "missing \"theta\"");
  record.fit.model.theta = jsonutil::parse_matrix_rows(j.at("theta"), source_name, "theta");
  if (record.fit.model.pi.size() != k || record.fit.model.theta.cols() != k) {
    jsonutil::fail(source_name, "\"K\" disagrees with pi/theta shapes");
  }
  record.fit.log_likelihood = jsonutil::require<double>(j, source_name, "log_likelihood");
  record.fit.bic = jsonutil::require<double>(j, source_name, "bic");
  record.fit.seed_used = jsonutil::require<std::uint64_t>(j, source_name, "seed");
  record.fit.converged = jsonutil::require<bool>(j, source_name, "converged");
  return record;
}

StratumModelRecord read_model_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  return read_model_json(in, path.filename().string());
}

void write_chain_json(std::ostream& out, const AlignmentChain& chain) {
  out << "{\n";
  out << "  \"threshold\": " << to_sig12(chain.threshold) << ",\n";
  out << "  \"matches\": [";
  for (std::size_t g = 0; g < chain.matches.size(); ++g) {
    if (g > 0) out << ",";
    out << "\n    {\"from_group\": " << g + 1 << ", \"pairs\": [";
    const auto& ms = chain.matches[g];
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (i > 0) out << ", ";
      out << '[' << ms[i].from << ", " << ms[i].to << ", "
          << to_sig12(ms[i].similarity) << ']';
    }
    out << "]}";
  }
  if (!chain.matches.empty()) out << "\n  ";
  out << "]\n}\n";
}

ChainDoc read_chain_json(std::istream& in, const std::string& source_name) {
  const auto j = jsonutil::parse_document(in, source_name);
  ChainDoc doc;
  doc.threshold = jsonutil::require<double>(j, source_name, "threshold");
  if (!j.contains("matches") || !j.at("matches").is_array()) {
    jsonutil::fail(source_name, "missing \"matches\" array");
  }
  const auto& matches = j.at("matches");
  doc.matches.resize(matches.size());
  for (const auto& entry : matches) {
    const auto g = jsonutil::require<int>(entry, source_name, "from_group");
    if (g < 1 || static_cast<std::size_t>(g) > doc.matches.size()) {
      jsonutil::fail(source_name, "\"from_group\" out of range");
    }
    MatchList list;
    for (const auto& pair : entry.at("pairs")) {
      if (!pair.is_array() || pair.size() != 3) {
        jsonutil::fail(source_name, "match entries must be [from, to, similarity]");
      }
      list.push_back(Match{pair[0].get<Index>(), pair[1].get<Index>(),
                           pair[2].get<double>()});
    }
    doc.matches[static_cast<std::size_t>(g - 1)] = std::move(list);
  }
  return doc;
}

ChainDoc read_chain_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open chain file " + path.string());
  return read_chain_json(in, path.filename().string());
}

AlignmentChain chain_from_doc(const ChainDoc& doc, const std::vector<LcaModel>& models) {
  if (models.size() != doc.matches.size() + 1) {
    throw ValidationError("chain match count does not fit the model count");
  }
  AlignmentChain chain;
  chain.threshold = doc.threshold;
  for (const auto& m : models) chain.cluster_counts.push_back(m.components());
  chain.matches = doc.matches;
  return chain;
}

void write_cluster_sets_json(std::ostream& out, const std::vector<ClusterSet>& sets) {
  Index singleton = 0;
  for (const auto& s : sets) singleton += s.singleton ? 1 : 0;
  out << "{\n";
  out << "  \"count\": " << sets.size() << ",\n";
  out << "  \"singleton\": " << singleton << ",\n";
  out << "  \"non_singleton\": " << static_cast<Index>(sets.size()) - singleton << ",\n";
  out << "  \"sets\": [";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (i > 0) out << ",";
    out << "\n    {\"id\": " << sets[i].id << ", \"members\": [";
    for (std::size_t m = 0; m < sets[i].members.size(); ++m) {
      if (m > 0) out << ", ";
      out << '[' << sets[i].members[m].first << ", " << sets[i].members[m].second
          << ']';
    }
    out << "], \"singleton\": " << (sets[i].singleton ? "true" : "false") << "}";
  }
  if (!sets.empty()) out << "\n  ";
  out << "]\n}\n";
}

}  // namespace stratlca
