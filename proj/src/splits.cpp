#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "snapcp/error.hpp"
#include "snapcp/harness.hpp"
#include "snapcp/seed.hpp"

namespace snapcp {

const char* to_string(Method m) noexcept {
    switch (m) {
        case Method::aps: return "aps";
        case Method::raps: return "raps";
        case Method::daps: return "daps";
        case Method::snaps: return "snaps";
    }
    return "unknown";
}

const char* to_string(BaseScore b) noexcept { return b == BaseScore::aps ? "aps" : "raps"; }

Method parse_method(std::string_view s) {
    if (s == "aps") return Method::aps;
    if (s == "raps") return Method::raps;
    if (s == "daps") return Method::daps;
    if (s == "snaps") return Method::snaps;
    throw ValidationError("unknown method '" + std::string(s) + "'");
}

std::size_t CalibRule::calib_size(std::size_t pool) const {
    const std::size_t size = kind == Kind::fixed ? fixed_size : std::min<std::size_t>(1000, pool / 2);
    if (size == 0 || size >= pool) {
        throw ValidationError("calibration size " + std::to_string(size) + " leaves no test nodes in a pool of " +
                              std::to_string(pool));
    }
    return size;
}

ConformalSplit draw_conformal_split(std::span<const NodeId> pool, const CalibRule& rule, std::uint64_t seed) {
    const std::size_t n_calib = rule.calib_size(pool.size());
    std::vector<NodeId> order(pool.begin(), pool.end());
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    ConformalSplit s;
    s.calib.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_calib));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_calib), order.end());
    return s;
}

SplitIndices sample_splits(const LabelVector& labels, const SplitConfig& cfg, std::uint64_t seed) {
    std::vector<std::vector<NodeId>> members(labels.num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<NodeId>(i));
    const std::size_t need = cfg.train_per_class + cfg.valid_per_class;
    std::mt19937_64 rng(derive_seed(seed, 0));
    SplitIndices s;
    std::vector<NodeId> pool;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& m = members[c];
        if (m.size() < need) {
            throw ValidationError("class " + std::to_string(c) + " has " + std::to_string(m.size()) +
                                  " nodes; the train/valid rule needs at least " + std::to_string(need));
        }
        std::shuffle(m.begin(), m.end(), rng);
        const auto t_end = m.begin() + static_cast<std::ptrdiff_t>(cfg.train_per_class);
        const auto v_end = t_end + static_cast<std::ptrdiff_t>(cfg.valid_per_class);
        s.train.insert(s.train.end(), m.begin(), t_end);
        s.valid.insert(s.valid.end(), t_end, v_end);
        pool.insert(pool.end(), v_end, m.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    std::sort(pool.begin(), pool.end());
    auto cs = draw_conformal_split(pool, cfg.calib_rule, derive_seed(seed, 1));
    s.calib = std::move(cs.calib);
    s.test = std::move(cs.test);
    return s;
}

CalibrationHalves split_for_tuning(std::span<const NodeId> calib) {
    const std::size_t half = calib.size() / 2;
    if (half == 0) throw ValidationError("calibration set too small to split for tuning");
    return {{calib.begin(), calib.begin() + static_cast<std::ptrdiff_t>(half)},
            {calib.begin() + static_cast<std::ptrdiff_t>(half), calib.end()}};
}

}  // namespace snapcp
