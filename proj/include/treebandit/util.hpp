#pragma once

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treebandit {

using Rng = std::mt19937_64;

// Index of the largest score; ties resolved uniformly at random.
template <typename Vec>
int argmax_uniform_ties(const Vec& scores, Rng& rng) {
    if (scores.empty()) throw std::invalid_argument("argmax of empty score vector");
    if (scores[0] != scores[0]) throw std::runtime_error("numerical failure: NaN score");
    int best = 0;
    int ties = 1;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
        if (scores[i] != scores[i]) throw std::runtime_error("numerical failure: NaN score");
        if (scores[i] > scores[best]) {
            best = i;
            ties = 1;
        } else if (scores[i] == scores[best]) {
            ++ties;
            if (std::uniform_int_distribution<int>(1, ties)(rng) == 1) best = i;
        }
    }
    return best;
}

// Shortest decimal form that round-trips through double.
std::string format_double(double v);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
double parse_double(std::string_view s, const std::string& what);
long long parse_int(std::string_view s, const std::string& what);

}  // namespace treebandit
