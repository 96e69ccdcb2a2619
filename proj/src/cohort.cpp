#include "stratlca/cohort.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace stratlca {

void ConditionCatalog::validate() const {
  if (names.empty()) {
    throw ValidationError("condition catalog is empty");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) {
      throw ValidationError("condition catalog contains an empty name");
    }
    if (!seen.insert(name).second) {
      throw ValidationError("duplicate condition name \"" + name + "\"");
    }
  }
}

void StrataSpec::validate() const {
  if (width < 1) {
    throw ConfigError("stratum width must be >= 1");
  }
  if (age_max < age_min) {
    throw ConfigError("age_max < age_min");
  }
  if ((age_max - age_min + 1) % width != 0) {
    std::ostringstream msg;
    msg << "age range " << age_min << "-" << age_max << " is not divisible into "
        << width << "-year strata";
    throw ConfigError(msg.str());
  }
}

int StrataSpec::group_count() const {
  validate();
  return (age_max - age_min + 1) / width;
}

int StrataSpec::group_of(int age) const { return (age - age_min) / width + 1; }

std::pair<int, int> StrataSpec::age_range(int g) const {
  const int lo = age_min + (g - 1) * width;
  return {lo, lo + width - 1};
}

Cohort::Cohort(std::shared_ptr<const ConditionCatalog> catalog,
               std::vector<std::string> ids, IntVector ages, Matrix conditions)
    : catalog_(std::move(catalog)),
      ids_(std::move(ids)),
      ages_(std::move(ages)),
      conditions_(std::move(conditions)) {
  catalog_->validate();
  const Index n = static_cast<Index>(ids_.size());
  if (ages_.size() != n || conditions_.rows() != n ||
      conditions_.cols() != catalog_->size()) {
    throw ValidationError("cohort fields disagree on record count or dimension");
  }
}

Cohort Cohort::from_records(const ConditionCatalog& catalog,
                            const std::vector<IndividualRecord>& records) {
  const Index n = static_cast<Index>(records.size());
  const Index d = catalog.size();
  std::vector<std::string> ids;
  ids.reserve(records.size());
  IntVector ages(n);
  Matrix conditions(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (static_cast<Index>(r.conditions.size()) != d) {
      throw ValidationError("record \"" + r.id + "\" has wrong condition count");
    }
    ids.push_back(r.id);
    ages[i] = r.age;
    for (Index j = 0; j < d; ++j) {
      conditions(i, j) = r.conditions[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    }
  }
  return Cohort(std::make_shared<ConditionCatalog>(catalog), std::move(ids),
                std::move(ages), std::move(conditions));
}

IndividualRecord Cohort::record(Index i) const {
  IndividualRecord r;
  r.id = ids_[static_cast<std::size_t>(i)];
  r.age = ages_[i];
  r.conditions.resize(static_cast<std::size_t>(dimension()));
  for (Index j = 0; j < dimension(); ++j) {
    r.conditions[static_cast<std::size_t>(j)] =
        conditions_(i, j) != 0.0 ? 1 : 0;
  }
  return r;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line_no,
                             const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line_no << ": " << what;
  throw ParseError(msg.str());
}

}  // namespace

Cohort load_cohort(std::istream& in,
                   const std::optional<ConditionCatalog>& catalog,
                   const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    parse_fail(source_name, 1, "missing header");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "age") {
    parse_fail(source_name, line_no,
               "header must be id,age,<cond_1>,...,<cond_D>");
  }
  ConditionCatalog resolved;
  resolved.names.assign(header.begin() + 2, header.end());
  resolved.validate();
  if (catalog) {
    if (catalog->names != resolved.names) {
      throw ValidationError(source_name +
                            ": header does not match the expected catalog");
    }
  }

  const std::size_t d = resolved.names.size();
  std::vector<std::string> ids;
  std::vector<int> ages;
  std::vector<double> cells;
  std::unordered_set<std::string> seen_ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    auto fields = split_csv_line(line);
    if (fields.size() != d + 2) {
      std::ostringstream msg;
      msg << "expected " << d + 2 << " columns, got " << fields.size();
      parse_fail(source_name, line_no, msg.str());
    }
    const std::string& id = fields[0];
    if (!seen_ids.insert(id).second) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": duplicate id \"" << id << "\"";
      throw ValidationError(msg.str());
    }
    int age = 0;
    const auto [ptr, ec] =
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), age);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) {
      parse_fail(source_name, line_no, "non-integer age \"" + fields[1] + "\"");
    }
    ids.push_back(id);
    ages.push_back(age);
    for (std::size_t j = 0; j < d; ++j) {
      const std::string& cell = fields[j + 2];
      if (cell == "0") {
        cells.push_back(0.0);
      } else if (cell == "1") {
        cells.push_back(1.0);
      } else {
        parse_fail(source_name, line_no,
                   "non-binary value \"" + cell + "\" in column " +
                       resolved.names[j]);
      }
    }
  }

  const Index n = static_cast<Index>(ids.size());
  IntVector age_vec(n);
  Matrix cond(n, static_cast<Index>(d));
  for (Index i = 0; i < n; ++i) {
    age_vec[i] = ages[static_cast<std::size_t>(i)];
    for (Index j = 0; j < static_cast<Index>(d); ++j) {
      cond(i, j) = cells[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
    }
  }
  return Cohort(std::make_shared<ConditionCatalog>(std::move(resolved)),
                std::move(ids), std::move(age_vec), std::move(cond));
}

Cohort load_cohort_file(const std::filesystem::path& path,
                        const std::optional<ConditionCatalog>& catalog) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open input file " + path.string());
  }
  return load_cohort(in, catalog, path.filename().string());
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
  out << "id,age";
  for (const auto& name : cohort.catalog().names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < cohort.size(); ++i) {
    out << cohort.ids()[static_cast<std::size_t>(i)] << ',' << cohort.ages()[i];
    for (Index j = 0; j < cohort.dimension(); ++j) {
      out << ',' << (cohort.conditions()(i, j) != 0.0 ? '1' : '0');
    }
    out << '\n';
  }
}

Cohort filter_eligible(const Cohort& cohort, const StrataSpec& spec,
                       FilterCounts* counts) {
  spec.validate();
  FilterCounts local;
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(cohort.size()));
  for (Index i = 0; i < cohort.size(); ++i) {
    const int age = cohort.ages()[i];
    if (age < spec.age_min || age > spec.age_max) {
      ++local.dropped_age;
      continue;
    }
    if (cohort.conditions().row(i).sum() < 1.0) {
      ++local.dropped_no_condition;
      continue;
    }
    keep.push_back(i);
  }
  local.kept = static_cast<Index>(keep.size());
  if (counts) *counts = local;

  std::vector<std::string> ids;
  ids.reserve(keep.size());
  IntVector ages(local.kept);
  Matrix cond(local.kept, cohort.dimension());
  for (Index r = 0; r < local.kept; ++r) {
    const Index i = keep[static_cast<std::size_t>(r)];
    ids.push_back(cohort.ids()[static_cast<std::size_t>(i)]);
    ages[r] = cohort.ages()[i];
    cond.row(r) = cohort.conditions().row(i);
  }
  return Cohort(cohort.catalog_ptr(), std::move(ids), std::move(ages),
                std::move(cond));
}

std::vector<Stratum> stratify(const Cohort& cohort, const StrataSpec& spec) {
  const int g_count = spec.group_count();
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(g_count));
  for (Index i = 0; i < cohort.size(); ++i) {
    const int age = cohort.ages()[i];
    if (age < spec.age_min || age > spec.age_max) {
      throw ValidationError(
          "stratify requires an eligibility-filtered cohort; found age " +
          std::to_string(age));
    }
    members[static_cast<std::size_t>(spec.group_of(age) - 1)].push_back(i);
  }

  std::vector<Stratum> strata;
  strata.reserve(static_cast<std::size_t>(g_count));
  for (int g = 1; g <= g_count; ++g) {
    const auto& rows = members[static_cast<std::size_t>(g - 1)];
    const Index n = static_cast<Index>(rows.size());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    IntVector ages(n);
    Matrix cond(n, cohort.dimension());
    for (Index r = 0; r < n; ++r) {
      const Index i = rows[static_cast<std::size_t>(r)];
      ids.push_back(cohort.ids()[static_cast<std::size_t>(i)]);
      ages[r] = cohort.ages()[i];
      cond.row(r) = cohort.conditions().row(i);
    }
    Stratum s;
    s.group_index = g;
    std::tie(s.age_lo, s.age_hi) = spec.age_range(g);
    s.data = Cohort(cohort.catalog_ptr(), std::move(ids), std::move(ages),
                    std::move(cond));
    strata.push_back(std::move(s));
  }
  return strata;
}

Vector condition_prevalence(const Cohort& cohort) {
  if (cohort.size() == 0) {
    throw ValidationError("empty stratum");
  }
  return cohort.conditions().colwise().mean().transpose();
}

Vector condition_prevalence(const Stratum& stratum) {
  return condition_prevalence(stratum.data);
}

void write_prevalence_csv(std::ostream& out, const ConditionCatalog& catalog,
                          const std::vector<Stratum>& strata,
                          const Cohort& eligible_cohort) {
  out << "condition";
  for (std::size_t g = 1; g <= strata.size(); ++g) out << ",g" << g;
  out << ",total\n";

  // Empty strata get blank cells; prevalence is undefined there.
  std::vector<std::optional<Vector>> per_group;
  per_group.reserve(strata.size());
  for (const auto& s : strata) {
    per_group.push_back(s.size() > 0 ? std::optional<Vector>(condition_prevalence(s))
                                     : std::nullopt);
  }
  const Vector total = condition_prevalence(eligible_cohort);

  char buf[32];
  for (Index d = 0; d < catalog.size(); ++d) {
    out << catalog.names[static_cast<std::size_t>(d)];
    for (const auto& p : per_group) {
      if (p) {
        std::snprintf(buf, sizeof(buf), "%.6f", (*p)[d]);
        out << ',' << buf;
      } else {
        out << ',';
      }
    }
    std::snprintf(buf, sizeof(buf), "%.6f", total[d]);
    out << ',' << buf << '\n';
  }
}

}  // namespace stratlca
