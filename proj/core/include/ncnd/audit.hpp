#pragma once

#include <string>
#include <vector>

namespace ncnd {

/// One lemma-level check. `value` and `bound` are printed exactly as computed
/// (rational strings where the check is exact) so ledgers diff cleanly.
struct AuditRecord {
    std::string phase;
    int iteration = 0;
    std::string property;
    std::string value;
    std::string bound;
    bool ok = true;
    std::string note;
};

struct AuditLedger {
    std::vector<AuditRecord> records;

    void add(AuditRecord rec) { records.push_back(std::move(rec)); }
    void check(const std::string& phase, int iteration, const std::string& property,
               const std::string& value, const std::string& bound, bool ok,
               const std::string& note = "") {
        records.push_back({phase, iteration, property, value, bound, ok, note});
    }
    void append(const AuditLedger& other) {
        records.insert(records.end(), other.records.begin(), other.records.end());
    }

    bool all_ok() const {
        for (const auto& r : records)
            if (!r.ok) return false;
        return true;
    }
    std::vector<AuditRecord> failures() const {
        std::vector<AuditRecord> out;
        for (const auto& r : records)
            if (!r.ok) out.push_back(r);
        return out;
    }

    /// One JSON object per line; the CLI writes this to --audit-ledger.
    std::string to_jsonl() const;
};

}  // namespace ncnd
