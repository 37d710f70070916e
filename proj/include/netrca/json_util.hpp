#pragma once

#include "netrca/error.hpp"

#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace netrca {

/// Reads keys from a JSON object, keeping defaults for absent keys and
/// rejecting keys that were never consumed.
class StrictReader {
public:
    StrictReader(const nlohmann::json& j, std::string where, ErrorKind kind = ErrorKind::InvalidConfig)
        : j_(j), where_(std::move(where)), kind_(kind) {
        if (!j_.is_object()) throw Error(kind_, where_ + ": expected a JSON object");
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(kind_, where_ + "." + key + ": " + e.what());
        }
    }

    template <typename T>
    void require(const std::string& key, T& out) {
        if (!j_.contains(key)) throw Error(kind_, where_ + ": missing key '" + key + "'");
        read(key, out);
    }

    void mark(const std::string& key) { seen_.insert(key); }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw Error(kind_, where_ + ": unknown key '" + key + "'");
        }
    }

private:
    const nlohmann::json& j_;
    std::string where_;
    ErrorKind kind_;
    std::set<std::string> seen_;
};

}  // namespace netrca
