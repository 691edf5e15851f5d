#ifndef HITSTAT_CSV_HPP
#define HITSTAT_CSV_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace hitstat {

// shortest round-trip decimal formatting; identical output on every run
std::string format_double(double v);

/// In-memory CSV assembly; artifacts are byte-deterministic strings written
/// once at the end of an experiment.
class CsvBuilder {
public:
    explicit CsvBuilder(std::vector<std::string> columns);

    CsvBuilder& cell(double v);
    CsvBuilder& cell(long v);
    CsvBuilder& cell(int v) { return cell(static_cast<long>(v)); }
    CsvBuilder& cell(std::size_t v) { return cell(static_cast<long>(v)); }
    CsvBuilder& cell(const std::string& v);
    void end_row();

    const std::string& str() const { return text_; }
    std::size_t rows() const { return rows_; }

private:
    std::string text_;
    std::size_t columns_;
    std::size_t current_ = 0;
    std::size_t rows_ = 0;
};

struct ReportCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Plain structured text report: sectioned key: value lines, one PASS/FAIL
/// line per exercised invariant, machine-diffable.
class ReportBuilder {
public:
    void section(const std::string& title);
    void kv(const std::string& key, const std::string& value);
    void kv(const std::string& key, double value);
    void kv(const std::string& key, long value);
    void kv(const std::string& key, std::size_t v) { kv(key, static_cast<long>(v)); }
    void kv(const std::string& key, int v) { kv(key, static_cast<long>(v)); }
    void column_doc(const std::string& file, const std::string& column, const std::string& meaning);
    void check(const std::string& name, bool pass, const std::string& detail = "");

    bool all_pass() const;
    std::string str() const;
    const std::vector<ReportCheck>& checks() const { return checks_; }

private:
    std::string body_;
    std::string columns_;
    std::vector<ReportCheck> checks_;
};

} // namespace hitstat

#endif
