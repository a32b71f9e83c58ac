#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cct/local_tests.hpp"
#include "cct/scores.hpp"
#include "cct/shiraishi.hpp"

namespace cct {

enum class BoundMethod { brute_force, simes_shortcut, storey_simes_shortcut, shiraishi_shortcut, separable_shortcut };

const char* to_string(BoundMethod m);

struct DiscoveryBound {
    std::vector<int> subset;
    std::string subset_spec;
    int d = 0;
    double alpha = 0.1;
    std::string test_id;
    BoundMethod method = BoundMethod::brute_force;
    double pvalue = 1.0;  // local-test p-value of H_S
    bool valid = true;
};

struct DiscoverySet {
    enum class Kind { fwer_closed_testing, bh_fdr };
    std::vector<int> indices;
    Kind kind = Kind::fwer_closed_testing;
};

// Evaluates phi_K for one local test on tie-resolved scores.
class LocalTester {
public:
    LocalTester(ScoreSet resolved, LocalTestSpec spec, std::shared_ptr<const ShiraishiTable> table = nullptr);

    TestOutcome operator()(const std::vector<int>& subset, double alpha) const;

    const ScoreSet& scores() const { return scores_; }
    const Eigen::VectorXd& pvalues() const { return p_; }
    const LocalTestSpec& spec() const { return spec_; }

private:
    const PermNull& null_for(int l) const;

    ScoreSet scores_;
    LocalTestSpec spec_;
    std::shared_ptr<const ShiraishiTable> table_;
    Eigen::VectorXd p_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::unique_ptr<PermNull>> nulls_;
};

constexpr int brute_force_cap = 20;

// All 2^n local tests, closed under supersets.
class BruteForceClosure {
public:
    BruteForceClosure(const LocalTester& tester, double alpha, int cap = brute_force_cap);
    int d(const std::vector<int>& subset) const;
    int n() const { return n_; }
    bool closed_reject(unsigned mask) const { return phibar_[mask] != 0; }

private:
    int n_;
    std::vector<char> phibar_;
};

DiscoveryBound closed_testing_bruteforce(const ScoreSet& s, const LocalTestSpec& test, const std::vector<int>& subset,
                                         double alpha, std::shared_ptr<const ShiraishiTable> table = nullptr);

int simes_h(const Eigen::VectorXd& p, double alpha);
DiscoveryBound simes_shortcut(const Eigen::VectorXd& p, const std::vector<int>& subset, double alpha);
DiscoveryBound storey_simes_shortcut(const Eigen::VectorXd& p, const std::vector<int>& subset, double alpha,
                                     double lambda);
// s must be tie-resolved; decreasing tables are handled through negated scores and the reflected table.
DiscoveryBound shiraishi_shortcut(const ScoreSet& s, const ShiraishiTable& table, const std::vector<int>& subset,
                                  double alpha);
DiscoveryBound separable_shortcut(const ScoreSet& s, const LocalTestSpec& test, const std::vector<int>& subset,
                                  double alpha);

// Shortcut when the test has one, brute force for n <= cap otherwise.
DiscoveryBound closed_testing_bound(const ScoreSet& resolved, const LocalTestSpec& test,
                                    const std::vector<int>& subset, double alpha,
                                    std::shared_ptr<const ShiraishiTable> table = nullptr);

DiscoverySet closed_testing_discoveries(const ScoreSet& resolved, const LocalTestSpec& test, double alpha,
                                        std::shared_ptr<const ShiraishiTable> table = nullptr);

struct BhResult {
    DiscoverySet set;
    int d_bh = 0;
};
BhResult bh_procedure(const Eigen::VectorXd& p, double alpha);

std::vector<int> all_indices(int n);

}  // namespace cct
