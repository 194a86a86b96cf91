#include "stablecut/rat.hpp"

namespace stablecut {

std::string rat_to_string(const Rat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

std::optional<Rat> rat_from_string(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto is_int = [](const std::string& t) {
    if (t.empty()) return false;
    size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!isdigit((unsigned char)t[i])) return false;
    return true;
  };
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      std::string num = s.substr(0, slash), den = s.substr(slash + 1);
      if (!is_int(num) || !is_int(den)) return std::nullopt;
      Int d(den);
      if (d == 0) return std::nullopt;
      return Rat(Int(num), d);
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
      std::string whole = s.substr(0, dot), frac = s.substr(dot + 1);
      if (whole.empty() || whole == "-" || whole == "+") whole += "0";
      if (!is_int(whole) || frac.empty()) return std::nullopt;
      for (char c : frac)
        if (!isdigit((unsigned char)c)) return std::nullopt;
      Int scale = 1;
      for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
      Rat r{Int(whole)};
      Rat f{Int(frac), scale};
      return s[0] == '-' ? Rat(r - f) : Rat(r + f);
    }
    if (!is_int(s)) return std::nullopt;
    return Rat(Int(s));
  } catch (...) {
    return std::nullopt;
  }
}

std::string rat_to_decimal(const Rat& r, int digits) {
  Int num = numerator(r), den = denominator(r);
  bool neg = num < 0;
  if (neg) num = -num;
  Int whole = Int(num / den), rem = Int(num % den);
  std::string out = (neg && (whole != 0 || rem != 0) ? "-" : "") + whole.str();
  if (digits <= 0) return out;
  out += ".";
  for (int i = 0; i < digits; ++i) {
    rem *= 10;
    out += Int(rem / den).str();
    rem %= den;
  }
  return out;
}

}  // namespace stablecut
