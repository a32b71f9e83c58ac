#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cct/pipeline.hpp"
#include "cct/simgen.hpp"

namespace cct {

// Null sizes of Simes and permutation Simes and the permutation critical value, by enumeration of
// all C(m+l, l) rank sets.
struct SimesSizeRow {
    int m = 0;
    int l = 0;
    double size_simes = 0.0;
    double size_perm = 0.0;
    double alpha_perm = 0.0;
};

SimesSizeRow simes_size_exact(int m, int l, double alpha);

// Shortcut bounds against brute-force closed testing for every non-empty S.
struct OracleFamily {
    std::string name;
    long instances = 0;
    long subsets = 0;
    long mismatches = 0;
    std::string first_mismatch;
};

std::vector<OracleFamily> oracle_equivalence(int m, int n_max, int instances, double alpha, std::uint64_t seed);

struct BenchMethod {
    enum class Kind { fixed, acode, cherry_picking };
    Kind kind = Kind::fixed;
    ScorerSpec scorer;
    LocalTestSpec test;
    std::vector<ScorerSpec> scorers;
    std::vector<LocalTestSpec> tests;

    static BenchMethod fixed(ScorerSpec s, LocalTestSpec t);
    static BenchMethod acode(std::vector<ScorerSpec> s, std::vector<LocalTestSpec> t);
    static BenchMethod cherry_picking(std::vector<ScorerSpec> s, std::vector<LocalTestSpec> t);
    std::string scorer_label() const;
    std::string test_label() const;
    bool valid() const { return kind != Kind::cherry_picking; }
};

struct BenchConfig {
    GeneratorSpec generator;
    std::vector<int> outlier_counts{0};
    std::vector<BenchMethod> methods;
    SubsetSpec subset;
    int reps = 100;
    double alpha = 0.1;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct TidyRow {
    std::string generator;
    int outliers = 0;
    std::string scorer;
    std::string test;
    int rep = 0;
    int d = 0;
    bool reject = false;
    double runtime_ms = 0.0;
};

struct AggregateRow {
    std::string generator;
    int outliers = 0;
    std::string scorer;
    std::string test;
    int reps = 0;
    double median_d = 0.0;
    double q90_d = 0.0;
    double power = 0.0;
    double mean_runtime_ms = 0.0;
};

// Data set of one repetition; every worker derives it from (seed, outlier count, rep).
std::uint64_t rep_seed(std::uint64_t master, int outliers, int rep);

std::vector<TidyRow> run_bench(const BenchConfig& cfg);
std::vector<AggregateRow> aggregate(const std::vector<TidyRow>& rows);
void write_tidy_csv(const std::vector<TidyRow>& rows, const std::string& path);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);

}  // namespace cct
