#include "floquet/ledger.hpp"

#include <algorithm>
#include <cmath>

namespace floquet {

double Condition::slack() const {
    if (relation == "<=" || relation == "<") return rhs - lhs;
    // ">" and "!=" both compare a magnitude against a threshold
    return lhs - rhs;
}

bool ConditionLedger::all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.pass; });
}

const Condition& ConditionLedger::at(const std::string& name) const {
    for (const auto& c : conditions) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("no condition named " + name);
}

double ConditionLedger::value(const std::string& name) const {
    for (const auto& [k, v] : values) {
        if (k == name) return v;
    }
    throw std::out_of_range("no ledger value named " + name);
}

void ConditionLedger::set(const std::string& name, double v) {
    for (auto& [k, old] : values) {
        if (k == name) {
            old = v;
            return;
        }
    }
    values.emplace_back(name, v);
}

Condition& ConditionLedger::add(Condition c) {
    conditions.push_back(std::move(c));
    return conditions.back();
}

}  // namespace floquet
