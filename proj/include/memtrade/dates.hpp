#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace memtrade {

// Calendar date stored as a serial day count (days since 1970-01-01, proleptic
// Gregorian). Day arithmetic is plain integer arithmetic, which keeps the decay
// formulas exact and reproducible.
class Date {
public:
    Date() = default;
    explicit constexpr Date(std::int32_t serial_days) : serial_(serial_days) {}

    static Date from_ymd(int year, int month, int day);

    // Parses strict ISO-8601 "YYYY-MM-DD". Throws ParseError otherwise.
    static Date parse(const std::string& text);

    std::string to_string() const;

    constexpr std::int32_t serial() const { return serial_; }

    friend constexpr auto operator<=>(Date, Date) = default;

    friend constexpr int operator-(Date a, Date b) { return a.serial_ - b.serial_; }
    friend constexpr Date operator+(Date d, int days) { return Date(d.serial_ + days); }
    friend constexpr Date operator-(Date d, int days) { return Date(d.serial_ - days); }

private:
    std::int32_t serial_ = 0;
};

// Inclusive calendar interval.
struct DateRange {
    Date start;
    Date end;

    bool contains(Date d) const { return start <= d && d <= end; }
    bool empty() const { return end < start; }
};

} // namespace memtrade
