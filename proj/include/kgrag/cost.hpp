#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

// Per-Q&A provider cost in USD, keyed by provider label.
class CostModel {
public:
    CostModel() = default;
    // Throws ContractViolation for a non-positive or non-finite cost.
    explicit CostModel(std::map<std::string, double, std::less<>> per_qa_usd);

    // Header "provider,cost_per_qa_usd".
    static CostModel from_csv(std::string_view text);
    std::string to_csv() const;

    const std::map<std::string, double, std::less<>>& per_qa_usd() const noexcept { return costs_; }
    std::vector<std::string> labels() const;
    // Throws NotFoundError listing the known labels.
    double per_qa(std::string_view label) const;

private:
    std::map<std::string, double, std::less<>> costs_;
};

// The table shipped with the engine: GPT-o1, Qwen-2.5-72b, DeepSeek-V3.
const CostModel& default_cost_model();
std::string_view default_cost_table_csv() noexcept;

// per_qa * n_queries * (1 - cache_hit_rate)
double estimate_cost(const CostModel& model, std::string_view provider_label, double n_queries,
                     double cache_hit_rate);

double cost_ratio(const CostModel& model, std::string_view a_label, std::string_view b_label);

}  // namespace kgrag
