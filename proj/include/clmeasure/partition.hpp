#pragma once

#include <algorithm>
#include <compare>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace clm {

class Partition {
public:
    Partition() = default;
    Partition(std::initializer_list<long> parts) : Partition(std::vector<long>(parts)) {}
    explicit Partition(std::vector<long> parts) : parts_(std::move(parts)) {
        while (!parts_.empty() && parts_.back() == 0) parts_.pop_back();
        for (size_t j = 0; j < parts_.size(); ++j) {
            if (parts_[j] <= 0) throw std::invalid_argument("Partition: parts must be positive");
            if (j > 0 && parts_[j] > parts_[j - 1])
                throw std::invalid_argument("Partition: parts must be non-increasing");
        }
    }
    static Partition from_unsorted(std::vector<long> v) {
        std::erase(v, 0L);
        std::sort(v.begin(), v.end(), std::greater<>());
        return Partition(std::move(v));
    }

    // 1-based; zero past the end
    long operator()(long j) const {
        if (j < 1 || j > static_cast<long>(parts_.size())) return 0;
        return parts_[static_cast<size_t>(j - 1)];
    }
    long length() const { return static_cast<long>(parts_.size()); }
    long total() const { return std::accumulate(parts_.begin(), parts_.end(), 0L); }
    long first() const { return (*this)(1); }
    bool empty() const { return parts_.empty(); }
    const std::vector<long>& parts() const { return parts_; }

    Partition conjugate() const {
        std::vector<long> c;
        for (long j = 1; j <= first(); ++j) {
            long n = 0;
            for (long p : parts_)
                if (p >= j) ++n;
            c.push_back(n);
        }
        return Partition(std::move(c));
    }

    std::string str() const {
        std::string s = "(";
        for (size_t j = 0; j < parts_.size(); ++j) {
            if (j) s += ",";
            s += std::to_string(parts_[j]);
        }
        return s + ")";
    }

    friend auto operator<=>(const Partition&, const Partition&) = default;
    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<long> parts_;
};

inline Partition conjugate(const Partition& p) { return p.conjugate(); }

// all partitions of n with at most max_len parts each at most max_part, in lexicographic order
inline std::vector<Partition> partitions_of(long n, long max_len = std::numeric_limits<long>::max(),
                                            long max_part = std::numeric_limits<long>::max()) {
    std::vector<Partition> out;
    std::vector<long> cur;
    std::function<void(long, long)> rec = [&](long rest, long cap) {
        if (rest == 0) {
            out.emplace_back(cur);
            return;
        }
        if (static_cast<long>(cur.size()) >= max_len) return;
        for (long p = 1; p <= std::min(rest, cap); ++p) {
            cur.push_back(p);
            rec(rest - p, p);
            cur.pop_back();
        }
    };
    rec(n, max_part);
    return out;
}

inline std::vector<Partition> partitions_up_to(long max_total, long max_len = std::numeric_limits<long>::max()) {
    std::vector<Partition> out;
    for (long n = 0; n <= max_total; ++n)
        for (auto& p : partitions_of(n, max_len)) out.push_back(std::move(p));
    return out;
}

// one partition per component id; absent = empty
class ModuleShape {
public:
    ModuleShape() = default;
    ModuleShape(std::initializer_list<std::pair<const int, Partition>> init) {
        for (const auto& [id, p] : init) set(id, p);
    }

    const Partition& operator[](int id) const {
        static const Partition empty;
        auto it = parts_.find(id);
        return it == parts_.end() ? empty : it->second;
    }
    void set(int id, const Partition& p) {
        if (p.empty()) parts_.erase(id);
        else parts_[id] = p;
    }
    bool empty() const { return parts_.empty(); }
    const std::map<int, Partition>& components() const { return parts_; }

    std::string str() const {
        std::string s = "{";
        bool first = true;
        for (const auto& [id, p] : parts_) {
            if (!first) s += ",";
            first = false;
            s += std::to_string(id) + ":" + p.str();
        }
        return s + "}";
    }

    friend auto operator<=>(const ModuleShape&, const ModuleShape&) = default;
    friend bool operator==(const ModuleShape&, const ModuleShape&) = default;

private:
    std::map<int, Partition> parts_;
};

}  // namespace clm
