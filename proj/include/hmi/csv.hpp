#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmi/version.hpp"

namespace hmi {

// CSV with a '#'-prefixed metadata block: tool version, effective config
// echo, RNG seed, wall clock. Lines starting with "# timestamp" or
// "# elapsed_sec" are the only run-dependent ones; everything else is a
// deterministic function of the configuration.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open output file " + path);
        out_.precision(17);
        start_ = std::chrono::steady_clock::now();
    }

    void meta(const std::string& key, const std::string& value) {
        out_ << "# " << key << " " << value << "\n";
    }
    void meta(const std::string& key, double value) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        meta(key, std::string(buf));
    }
    void meta(const std::string& key, std::uint64_t value) {
        meta(key, std::to_string(value));
    }

    void config_echo(const std::map<std::string, std::string>& kv) {
        meta("tool", std::string("hmi ") + HMI_VERSION);
        for (const auto& [k, v] : kv) meta("config " + k, v);
        const std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        meta("timestamp", std::string(buf));
    }

    void header(const std::vector<std::string>& columns) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        char buf[64];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12g", values[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << "\n";
    }

    void finish() {
        const auto elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
        meta("elapsed_sec", elapsed);
        out_.flush();
    }

private:
    std::ofstream out_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace hmi
