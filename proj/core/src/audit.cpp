#include "ncnd/audit.hpp"

#include <sstream>

namespace ncnd {
namespace {

void json_escape(std::ostream& os, const std::string& s) {
    os << '"';
    for (char c : s) {
        switch (c) {
            case '"': os << "\\\""; break;
            case '\\': os << "\\\\"; break;
            case '\n': os << "\\n"; break;
            case '\t': os << "\\t"; break;
            default: os << c;
        }
    }
    os << '"';
}

}  // namespace

std::string AuditLedger::to_jsonl() const {
    std::ostringstream os;
    for (const auto& r : records) {
        os << "{\"phase\":";
        json_escape(os, r.phase);
        os << ",\"iteration\":" << r.iteration << ",\"property\":";
        json_escape(os, r.property);
        os << ",\"value\":";
        json_escape(os, r.value);
        os << ",\"bound\":";
        json_escape(os, r.bound);
        os << ",\"ok\":" << (r.ok ? "true" : "false");
        if (!r.note.empty()) {
            os << ",\"note\":";
            json_escape(os, r.note);
        }
        os << "}\n";
    }
    return os.str();
}

}  // namespace ncnd
