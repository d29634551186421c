#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hoa {

inline constexpr std::size_t kMinWilcoxonPairs = 5;
inline constexpr std::size_t kMaxExactWilcoxon = 20;

struct WilcoxonResult {
    std::size_t n = 0; // pairs with a nonzero difference
    double w_plus = 0.0;
    double w_minus = 0.0;
    double p_value = 1.0; // two-sided
    bool exact = false;
};

/// Paired signed-rank test on a - b. Zero differences are dropped and ties get average ranks.
/// Exact null distribution for n <= 20, normal approximation with tie correction above.
/// Throws ValidationError on unequal lengths, non-finite values or fewer than 5 nonzero pairs.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg adjusted p-values, in input order.
std::vector<double> bh_adjust(std::span<const double> p);
/// Step-up rejections at FDR level q.
std::vector<bool> bh_reject(std::span<const double> p, double q);

struct PairedColumn {
    std::string name;
    std::vector<double> a;
    std::vector<double> b;
};

struct PairedSampleTable {
    std::vector<PairedColumn> columns;
};

struct ColumnTest {
    std::string name;
    std::optional<WilcoxonResult> test; // empty when the column has too few nonzero pairs
    std::optional<double> q_value;
    bool significant = false;
};

/// Per-column tests with BH correction across the testable columns at level q.
std::vector<ColumnTest> wilcoxon_fdr(const PairedSampleTable& table, double q);

/// Builds a table from two long-format CSVs (subject,metric,region,surface,side,value).
/// Columns are keyed by metric/region/surface/side; rows with NA in either file are skipped.
/// Throws ValidationError when the two files cover different subjects.
PairedSampleTable paired_table_from_csv(std::string_view csv_a, std::string_view csv_b);

/// column,n,w_plus,w_minus,p_value,q_value,significant,stars
std::string stats_to_csv(const std::vector<ColumnTest>& tests);

} // namespace hoa
