#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "sign/engine.hpp"
#include "sign/lexicon.hpp"

namespace sign {

// Fraction of unordered agent pairs whose names are both decodable and
// equal, over all C(n,2) pairs. Agents that never spoke keep their pairs
// in the denominator; those pairs simply cannot match.
double pairwise_agreement(const std::vector<DecodedName>& names);

// Largest share of agents on one name (undecoded agents count toward n).
double modal_agreement(const std::vector<DecodedName>& names);

struct AgreementSample {
    int round = 0;
    double pairwise = 0.0;
    double modal = 0.0;
    long long cumulative_tokens = 0;
};

std::vector<AgreementSample> agreement_samples(const RunLog& log);

// Cumulative tokens at the first round whose configured agreement metric
// reaches `threshold`; empty when the run never gets there.
std::optional<long long> tokens_to_convergence(const RunLog& log, double threshold);

struct AggregateCell {
    double mean = 0.0;
    double std_dev = 0.0; // sample (n-1); 0 for a single run
    int n_seeds = 0;
};

AggregateCell aggregate(const std::vector<double>& values);

struct CellKey {
    std::string condition;
    int n_agents = 0;
    int memory_window = 0;
    double alpha = 0.0;

    auto operator<=>(const CellKey&) const = default;
};

// Final-round agreement of each run, grouped by (condition, N, K, alpha).
// Every log's own configured metric is used; mixing metrics in one group
// is rejected.
std::map<CellKey, std::vector<double>> collect_finals(const std::vector<RunLog>& logs);
std::map<CellKey, AggregateCell> aggregate_cells(const std::vector<RunLog>& logs);

struct CurvePoint {
    int round = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    double mean_cumulative_tokens = 0.0;
};

// Per-round mean and sample standard deviation of agreement across seeds.
// All logs must share the same round count.
std::vector<CurvePoint> agreement_curve(const std::vector<RunLog>& logs);

// CSV emitters (the plot-ready files). Columns are documented in the README.
void write_summary_csv(std::ostream& out, const std::vector<RunLog>& logs);
void write_table1_csv(std::ostream& out, const std::vector<RunLog>& logs);
void write_tokens_csv(std::ostream& out, const std::vector<RunLog>& logs,
                      const std::vector<double>& thresholds);
void write_curve_csv(std::ostream& out, const std::vector<RunLog>& logs);

} // namespace sign
