#include "kce/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>

namespace kce {

namespace {
std::mutex g_sink_mutex;
WarningSink g_sink;
}  // namespace

void set_warning_sink(WarningSink sink) {
    std::lock_guard lock(g_sink_mutex);
    g_sink = std::move(sink);
}

void warn(std::string_view message) {
    std::lock_guard lock(g_sink_mutex);
    if (g_sink) {
        g_sink(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

void require_finite(const Eigen::Ref<const MatrixXd>& m, std::string_view what) {
    if (!m.allFinite()) {
        throw InvalidArgument(std::string(what) + ": non-finite value");
    }
}

void require_binary(const Labels& y, std::string_view what) {
    for (Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) {
            throw InvalidArgument(std::string(what) + ": labels must be 0 or 1");
        }
    }
}

double majority_rate(const Labels& y) {
    if (y.size() == 0) return 0.0;
    const double ones = static_cast<double>(y.sum());
    const double n = static_cast<double>(y.size());
    return std::max(ones, n - ones) / n;
}

double softplus(double s) {
    if (s > 0) return s + std::log1p(std::exp(-s));
    return std::log1p(std::exp(s));
}

double sigmoid(double s) {
    if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw InvalidArgument("format_double: conversion failed");
    return std::string(buf, end);
}

}  // namespace kce
