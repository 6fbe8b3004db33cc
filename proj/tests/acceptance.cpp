// One line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <iomanip>
#include <iostream>

#include "clmeasure.hpp"

namespace {

struct Criterion {
    int id;
    const char* title;
    const char* suite;
    double budget_s;  // 0: no hard limit
};

const Criterion kCriteria[] = {
    {1, "reference table for C3, p=2, r=2, u=1", "reference-table", 5},
    {2, "closed form of Pf at t=0", "pf-identity", 1},
    {3, "support characterization for C7", "support", 30},
    {4, "normalization of the C3 measure", "normalization", 60},
    {5, "moment consistency", "moment-check", 0},
    {6, "v-reconstruction", "reconstruct", 0},
    {7, "combinatorial oracle", "oracle", 0},
    {8, "matrix-model statistics", "simulate", 600},
    {9, "exact C7 ratios and agreement verdicts", "ratios", 1},
    {10, "C7 formula double route", "c7-formula", 30},
};

}  // namespace

int main() {
    bool all = true;
    for (const auto& c : kCriteria) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = clm::run_suite(c.suite);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s == 0 || secs < c.budget_s;
        const bool ok = r && r->pass && in_time;
        all = all && ok;
        std::cout << "criterion " << std::setw(2) << c.id << ": " << (ok ? "PASS" : "FAIL") << "  " << c.title
                  << " [" << c.suite << ", " << std::fixed << std::setprecision(2) << secs << " s]";
        if (!in_time) std::cout << " over the " << c.budget_s << " s budget";
        std::cout << "\n";
        if (r)
            for (const auto& f : r->failures) std::cout << "    " << f << "\n";
        std::cout.flush();
    }
    return all ? 0 : 1;
}
