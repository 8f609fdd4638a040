#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace floquet {

/// One checked hypothesis: `lhs relation rhs`.
struct Condition {
    std::string name;
    std::string relation;  // "<=", "<", ">", "!="
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    /// Failed, but within 1e-6 relative of passing.
    bool borderline = false;
    std::string note;

    /// Signed margin: positive when the condition holds.
    double slack() const;
};

struct ConditionLedger {
    std::vector<Condition> conditions;
    std::vector<std::pair<std::string, double>> values;

    bool all_pass() const;
    const Condition& at(const std::string& name) const;
    double value(const std::string& name) const;
    void set(const std::string& name, double v);
    Condition& add(Condition c);
};

/// A theorem was invoked on an instance that fails its hypotheses.
class HypothesisError : public std::runtime_error {
public:
    HypothesisError(const std::string& what, ConditionLedger ledger)
        : std::runtime_error(what), ledger_(std::move(ledger)) {}
    const ConditionLedger& ledger() const noexcept { return ledger_; }

private:
    ConditionLedger ledger_;
};

}  // namespace floquet
