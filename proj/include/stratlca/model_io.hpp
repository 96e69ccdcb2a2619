#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stratlca/alignment.hpp"
#include "stratlca/lca.hpp"
#include "stratlca/types.hpp"

namespace stratlca {

/// One fitted stratum as persisted to disk. Group 0 is the whole-population
/// comparison fit.
struct StratumModelRecord {
  int group = 0;
  int age_lo = 0;
  int age_hi = 0;
  FitResult fit;
  std::string source;  // file the record was read from, for diagnostics
};

/// `{"group": g, "age_range": [lo, hi], "K": K, "pi": [...], "theta": [[...]],
/// "log_likelihood": x, "bic": x, "seed": s, "converged": b}` with theta as D
/// rows of K values and floats at 12 significant digits.
void write_model_json(std::ostream& out, const StratumModelRecord& record);
void write_model_json_file(const std::filesystem::path& path,
                           const StratumModelRecord& record);
StratumModelRecord read_model_json(std::istream& in, const std::string& source_name);
StratumModelRecord read_model_json_file(const std::filesystem::path& path);

/// `{"threshold": t, "matches": [{"from_group": g, "pairs": [[i, j, s], ...]},
/// ...]}` covering every consecutive pair, similarities at 12 significant
/// digits.
void write_chain_json(std::ostream& out, const AlignmentChain& chain);

struct ChainDoc {
  double threshold = 0.7;
  std::vector<MatchList> matches;  // matches[g-1] links groups g and g+1
};

ChainDoc read_chain_json(std::istream& in, const std::string& source_name);
ChainDoc read_chain_json_file(const std::filesystem::path& path);

/// Reassembles a chain from persisted matches plus the models they refer to.
AlignmentChain chain_from_doc(const ChainDoc& doc, const std::vector<LcaModel>& models);

void write_cluster_sets_json(std::ostream& out, const std::vector<ClusterSet>& sets);

}  // namespace stratlca
