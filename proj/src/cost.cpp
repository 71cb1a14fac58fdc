#include "kgrag/cost.hpp"

#include "kgrag/csv.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <cmath>
#include <cstdio>

namespace kgrag {

namespace {

constexpr std::string_view kDefaultTable =
    "provider,cost_per_qa_usd\r\n"
    "GPT-o1,2.98e-3\r\n"
    "Qwen-2.5-72b,3.27e-4\r\n"
    "DeepSeek-V3,2.18e-4\r\n";

}  // namespace

CostModel::CostModel(std::map<std::string, double, std::less<>> per_qa_usd)
    : costs_(std::move(per_qa_usd)) {
    for (const auto& [label, usd] : costs_) {
        if (!(std::isfinite(usd) && usd > 0.0)) {
            throw ContractViolation("cost for '" + label + "' must be positive");
        }
    }
}

CostModel CostModel::from_csv(std::string_view text) {
    const auto records = csv::parse(text);
    if (records.empty() || records[0].fields.size() != 2 || trim(records[0].fields[0]) != "provider" ||
        trim(records[0].fields[1]) != "cost_per_qa_usd") {
        throw FormatError("cost table header must be 'provider,cost_per_qa_usd'");
    }
    std::map<std::string, double, std::less<>> costs;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;
        if (rec.fields.size() != 2) {
            throw FormatError("cost table line " + std::to_string(rec.line) + ": expected 2 columns");
        }
        double v = 0.0;
        try {
            std::size_t pos = 0;
            const std::string field = trim(rec.fields[1]);
            v = std::stod(field, &pos);
            if (pos != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw FormatError("cost table line " + std::to_string(rec.line) + ": bad cost '" +
                              rec.fields[1] + "'");
        }
        costs[trim(rec.fields[0])] = v;
    }
    return CostModel(std::move(costs));
}

std::string CostModel::to_csv() const {
    std::string out = "provider,cost_per_qa_usd\r\n";
    for (const auto& [label, usd] : costs_) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", usd);
        out += csv::format_row({label, buf});
    }
    return out;
}

std::vector<std::string> CostModel::labels() const {
    std::vector<std::string> out;
    for (const auto& [label, usd] : costs_) out.push_back(label);
    return out;
}

double CostModel::per_qa(std::string_view label) const {
    auto it = costs_.find(label);
    if (it == costs_.end()) {
        std::string known;
        for (const auto& l : labels()) known += (known.empty() ? "" : ", ") + l;
        throw NotFoundError("unknown provider '" + std::string(label) + "' (known: " + known + ")");
    }
    return it->second;
}

const CostModel& default_cost_model() {
    static const CostModel model = CostModel::from_csv(kDefaultTable);
    return model;
}

std::string_view default_cost_table_csv() noexcept { return kDefaultTable; }

double estimate_cost(const CostModel& model, std::string_view provider_label, double n_queries,
                     double cache_hit_rate) {
    if (!(cache_hit_rate >= 0.0 && cache_hit_rate <= 1.0)) {
        throw ContractViolation("cache_hit_rate must lie in [0, 1]");
    }
    if (!(n_queries >= 0.0)) throw ContractViolation("n_queries must be >= 0");
    return model.per_qa(provider_label) * n_queries * (1.0 - cache_hit_rate);
}

double cost_ratio(const CostModel& model, std::string_view a_label, std::string_view b_label) {
    return model.per_qa(a_label) / model.per_qa(b_label);
}

}  // namespace kgrag
