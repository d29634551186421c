#include "hoa/stats.hpp"

#include "hoa/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace hoa {
namespace {

/// P(W+ <= w) and P(W+ >= w) on doubled ranks, by counting sign assignments.
std::pair<double, double> exact_tails(const std::vector<int>& ranks2, int w2)
{
    const int total = std::accumulate(ranks2.begin(), ranks2.end(), 0);
    std::vector<double> count(std::size_t(total) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int r : ranks2) {
        for (int s = reach; s >= 0; --s)
            if (count[std::size_t(s)] != 0.0) count[std::size_t(s + r)] += count[std::size_t(s)];
        reach += r;
    }
    const double all = std::ldexp(1.0, int(ranks2.size()));
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total; ++s) {
        if (s <= w2) lower += count[std::size_t(s)];
        if (s >= w2) upper += count[std::size_t(s)];
    }
    return {lower / all, upper / all};
}

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

using LongTable = std::map<std::string, std::map<std::string, std::optional<double>>>; // column -> subject -> value

LongTable parse_long_csv(std::string_view text, std::set<std::string>& subjects)
{
    LongTable table;
    std::istringstream is{std::string(text)};
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (first) {
            first = false;
            if (f.size() == 6 && f[0] == "subject") continue;
        }
        if (f.size() != 6)
            throw ValidationError("CSV line " + std::to_string(lineno) + ": expected 6 fields, got " +
                                  std::to_string(f.size()));
        const std::string key = f[1] + "/" + f[2] + "/" + f[3] + "/" + f[4];
        std::optional<double> v;
        if (f[5] != "NA") {
            try {
                std::size_t used = 0;
                v = std::stod(f[5], &used);
                if (used != f[5].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ValidationError("CSV line " + std::to_string(lineno) + ": bad value '" + f[5] + "'");
            }
        }
        subjects.insert(f[0]);
        if (!table[key].emplace(f[0], v).second)
            throw ValidationError("CSV line " + std::to_string(lineno) + ": duplicate entry for " + f[0] + " " + key);
    }
    return table;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw ValidationError("wilcoxon: samples differ in length");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw ValidationError("wilcoxon: non-finite value");
        const double diff = a[i] - b[i];
        if (diff != 0.0) d.push_back(diff);
    }
    const std::size_t n = d.size();
    if (n < kMinWilcoxonPairs)
        throw ValidationError("wilcoxon: need at least 5 nonzero differences, have " + std::to_string(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

    // Doubled average ranks stay integral.
    std::vector<int> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const int r2 = int(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        const double t = double(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    WilcoxonResult res;
    res.n = n;
    int w2_plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0)
            w2_plus += rank2[i];
        else
            res.w_minus += rank2[i] / 2.0;
    }
    res.w_plus = w2_plus / 2.0;

    if (n <= kMaxExactWilcoxon) {
        const auto [lower, upper] = exact_tails(rank2, w2_plus);
        res.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
        res.exact = true;
    } else {
        const double nn = double(n);
        const double mean = nn * (nn + 1) / 4.0;
        const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
        const double z = (res.w_plus - mean) / std::sqrt(var);
        res.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    }
    return res;
}

std::vector<double> bh_adjust(std::span<const double> p)
{
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const std::size_t idx = order[r];
        if (!(p[idx] >= 0.0 && p[idx] <= 1.0)) throw ValidationError("p-values must lie in [0, 1]");
        running = std::min(running, p[idx] * (double(m) / double(r + 1)));
        q[idx] = running;
    }
    return q;
}

std::vector<bool> bh_reject(std::span<const double> p, double q)
{
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("FDR level must lie in (0, 1]");
    const auto adj = bh_adjust(p);
    std::vector<bool> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = adj[i] <= q;
    return out;
}

std::vector<ColumnTest> wilcoxon_fdr(const PairedSampleTable& table, double q)
{
    std::vector<ColumnTest> out;
    std::vector<double> pvals;
    std::vector<std::size_t> tested;
    for (const auto& col : table.columns) {
        ColumnTest t{col.name, std::nullopt, std::nullopt, false};
        if (col.a.size() != col.b.size()) throw ValidationError("column " + col.name + ": A and B differ in length");
        std::size_t nonzero = 0;
        for (std::size_t i = 0; i < col.a.size(); ++i) nonzero += col.a[i] != col.b[i];
        if (nonzero >= kMinWilcoxonPairs) {
            t.test = wilcoxon_signed_rank(col.a, col.b);
            pvals.push_back(t.test->p_value);
            tested.push_back(out.size());
        }
        out.push_back(std::move(t));
    }
    if (!pvals.empty()) {
        const auto adj = bh_adjust(pvals);
        const auto rej = bh_reject(pvals, q);
        for (std::size_t i = 0; i < tested.size(); ++i) {
            out[tested[i]].q_value = adj[i];
            out[tested[i]].significant = rej[i];
        }
    } else if (!(q > 0.0 && q <= 1.0)) {
        throw ValidationError("FDR level must lie in (0, 1]");
    }
    return out;
}

PairedSampleTable paired_table_from_csv(std::string_view csv_a, std::string_view csv_b)
{
    std::set<std::string> subj_a, subj_b;
    const LongTable ta = parse_long_csv(csv_a, subj_a);
    const LongTable tb = parse_long_csv(csv_b, subj_b);
    if (subj_a != subj_b) {
        std::string diff;
        for (const auto& s : subj_a)
            if (!subj_b.count(s)) diff += " " + s + "(A only)";
        for (const auto& s : subj_b)
            if (!subj_a.count(s)) diff += " " + s + "(B only)";
        throw ValidationError("subject sets differ:" + diff);
    }
    PairedSampleTable table;
    for (const auto& [key, rows_a] : ta) {
        const auto it = tb.find(key);
        if (it == tb.end()) continue;
        PairedColumn col{key, {}, {}};
        for (const auto& [subject, va] : rows_a) {
            const auto jt = it->second.find(subject);
            if (jt == it->second.end() || !va || !jt->second) continue;
            col.a.push_back(*va);
            col.b.push_back(*jt->second);
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

std::string stats_to_csv(const std::vector<ColumnTest>& tests)
{
    std::ostringstream os;
    os << "column,n,w_plus,w_minus,p_value,q_value,significant,stars\n";
    for (const auto& t : tests) {
        os << t.name << ',';
        if (t.test)
            os << t.test->n << ',' << num(t.test->w_plus) << ',' << num(t.test->w_minus) << ','
               << num(t.test->p_value) << ',' << num(*t.q_value);
        else
            os << "0,NA,NA,NA,NA";
        os << ',' << (t.significant ? "true" : "false") << ',' << (t.significant ? "*" : "") << '\n';
    }
    return os.str();
}

} // namespace hoa
