#pragma once

#include "tracelens/admixture.hpp"
#include "tracelens/dtmc.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace tracelens {

// Per-user pattern weight distribution, drawn as a curve: column k of theta
// sorted non-decreasingly, user rank rescaled to [0,1].
struct ThetaCurvePoint {
    double x;
    double y;
};

struct ThetaCurve {
    int pattern; // 1-based
    std::vector<ThetaCurvePoint> points;
};

// k is 1-based (pattern APk). A single-user model yields one point at x=0.
ThetaCurve theta_curve(const AdmixtureModel& model, int k);
std::string theta_curve_csv(const ThetaCurve& curve);

// PRISM subset writer: one module with variable x, one command per state
// listing the nonzero updates (17 significant digits, row sum asserted in a
// trailing comment), a label line per singleton label, reward blocks for
// state-kind structures and for transition-kind structures that are
// constant per row. Labels must be singletons.
std::string export_prism(const Dtmc& dtmc, const std::string& name);

// Companion reader for round-trips; parses exactly what export_prism emits.
Dtmc import_prism(std::string_view text, std::string_view origin = "model");

// One row per (property, cut, label) with a value per pattern and the
// query text that produced it.
struct ResultRow {
    std::string property_id;
    std::string cut;
    std::string label;
    std::string query;
    std::vector<double> values; // one per pattern, may be infinite
};

struct ResultTable {
    int patterns = 0;
    std::vector<ResultRow> rows;
};

// RFC-4180, header property,cut,label,AP1..APk,query; infinities as "inf".
std::string results_table_csv(const ResultTable& table);

// DOT digraph with transition probabilities bucketed into pen widths.
// Ascending thresholds; edges below the first are omitted, an edge in
// bucket i gets penwidth i+1. Defaults are a documented guess.
std::string pattern_graph_dot(const Dtmc& dtmc, const std::string& name,
                              const std::vector<double>& thresholds = {0.05, 0.2, 0.5});

// Admixture model file: vocabulary, K pattern matrices and theta, numbers
// at 17 significant digits so reload is exact.
std::string serialize_model(const AdmixtureModel& model);
AdmixtureModel parse_model(std::string_view text, std::string_view origin = "model");

void save_model(const std::string& path, const AdmixtureModel& model);
AdmixtureModel load_model(const std::string& path);

} // namespace tracelens
