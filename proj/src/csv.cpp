#include "hitstat/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hitstat {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    // shortest representation that round-trips
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvBuilder::CsvBuilder(std::vector<std::string> columns) : columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) text_ += ',';
        text_ += columns[i];
    }
    text_ += '\n';
}

CsvBuilder& CsvBuilder::cell(double v) { return cell(format_double(v)); }

CsvBuilder& CsvBuilder::cell(long v) { return cell(std::to_string(v)); }

CsvBuilder& CsvBuilder::cell(const std::string& v) {
    if (current_ >= columns_) throw std::logic_error("CsvBuilder: too many cells in row");
    if (current_) text_ += ',';
    text_ += v;
    ++current_;
    return *this;
}

void CsvBuilder::end_row() {
    if (current_ != columns_) throw std::logic_error("CsvBuilder: incomplete row");
    text_ += '\n';
    current_ = 0;
    ++rows_;
}

void ReportBuilder::section(const std::string& title) {
    body_ += "\n[" + title + "]\n";
}

void ReportBuilder::kv(const std::string& key, const std::string& value) {
    body_ += key + ": " + value + "\n";
}

void ReportBuilder::kv(const std::string& key, double value) { kv(key, format_double(value)); }

void ReportBuilder::kv(const std::string& key, long value) { kv(key, std::to_string(value)); }

void ReportBuilder::column_doc(const std::string& file, const std::string& column,
                               const std::string& meaning) {
    columns_ += "column: " + file + ":" + column + " = " + meaning + "\n";
}

void ReportBuilder::check(const std::string& name, bool pass, const std::string& detail) {
    checks_.push_back({name, pass, detail});
}

bool ReportBuilder::all_pass() const {
    for (const ReportCheck& c : checks_)
        if (!c.pass) return false;
    return true;
}

std::string ReportBuilder::str() const {
    std::string out;
    if (!columns_.empty()) out += "[columns]\n" + columns_;
    out += body_;
    out += "\n[checks]\n";
    for (const ReportCheck& c : checks_) {
        out += c.pass ? "PASS" : "FAIL";
        out += ": " + c.name;
        if (!c.detail.empty()) out += " (" + c.detail + ")";
        out += '\n';
    }
    out += all_pass() ? "result: all-pass\n" : "result: has-failures\n";
    return out;
}

} // namespace hitstat
