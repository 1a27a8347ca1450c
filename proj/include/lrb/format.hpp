#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include <lrb/types.hpp>

namespace lrb {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw NumericError("format_double: conversion failed");
    return std::string(buf, end);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw DomainError("parse_double: not a number: '" + std::string(s) + "'");
    return x;
}

} // namespace lrb
