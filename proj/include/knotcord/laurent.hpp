#pragma once
#include <cstdint>
#include <map>
#include <string>

namespace knotcord {

// Integer Laurent polynomial in one variable, zero coefficients pruned.
struct Laurent {
  std::map<int, long long> c;  // exponent -> coefficient

  static Laurent mono(int e, long long v) {
    Laurent l;
    if (v != 0) l.c[e] = v;
    return l;
  }

  void add_term(int e, long long v) {
    if (v == 0) return;
    auto it = c.find(e);
    if (it == c.end()) {
      c[e] = v;
    } else if ((it->second += v) == 0) {
      c.erase(it);
    }
  }

  Laurent operator+(const Laurent& o) const {
    Laurent r = *this;
    for (auto [e, v] : o.c) r.add_term(e, v);
    return r;
  }
  Laurent operator*(const Laurent& o) const {
    Laurent r;
    for (auto [e1, v1] : c)
      for (auto [e2, v2] : o.c) r.add_term(e1 + e2, v1 * v2);
    return r;
  }
  bool operator==(const Laurent& o) const { return c == o.c; }

  // Rendered lowest exponent first, e.g. "q^-3 + 2*q^-1 - q^5"; "0" if empty.
  std::string str(const std::string& var = "q") const {
    if (c.empty()) return "0";
    std::string out;
    for (auto [e, v] : c) {
      long long a = v;
      if (out.empty()) {
        if (a < 0) {
          out += "-";
          a = -a;
        }
      } else {
        out += a < 0 ? " - " : " + ";
        if (a < 0) a = -a;
      }
      if (a != 1 || e == 0) out += std::to_string(a);
      if (e != 0) {
        if (a != 1) out += "*";
        out += var;
        if (e != 1) out += "^" + std::to_string(e);
      }
    }
    return out;
  }
};

}  // namespace knotcord
