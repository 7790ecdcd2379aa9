// Copyright 2026 The starsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "starsense/pulseprog.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "starsense/keyvalue.hpp"

namespace starsense {

std::string_view to_string(PulseTarget target) {
  switch (target) {
    case PulseTarget::cc: return "CC";
    case PulseTarget::cs: return "CS";
    case PulseTarget::all: return "ALL";
  }
  return "?";
}

bool operator==(const RepeatEvent& a, const RepeatEvent& b) {
  return a.count == b.count && a.body == b.body;
}

bool operator==(const Event& a, const Event& b) { return a.kind == b.kind; }

const AcquireEvent& PulseProgram::acquire() const {
  if (events.empty() || !std::holds_alternative<AcquireEvent>(events.back().kind)) {
    throw std::logic_error("pulse program has no trailing acquire");
  }
  return std::get<AcquireEvent>(events.back().kind);
}

namespace {

double duration_of(const std::vector<Event>& events) {
  double total = 0.0;
  for (const auto& e : events) {
    if (const auto* d = std::get_if<DelayEvent>(&e.kind)) total += d->seconds();
    if (const auto* r = std::get_if<RepeatEvent>(&e.kind)) total += r->count * duration_of(r->body);
  }
  return total;
}

std::size_t pulses_on(const std::vector<Event>& events, PulseTarget target) {
  std::size_t n = 0;
  for (const auto& e : events) {
    if (const auto* p = std::get_if<PulseEvent>(&e.kind)) {
      if (p->target == target || p->target == PulseTarget::all) ++n;
    }
    if (const auto* r = std::get_if<RepeatEvent>(&e.kind)) {
      n += static_cast<std::size_t>(r->count) * pulses_on(r->body, target);
    }
  }
  return n;
}

}  // namespace

double PulseProgram::duration_s() const { return duration_of(events); }

std::size_t PulseProgram::pulse_count(PulseTarget target) const { return pulses_on(events, target); }

std::string ParseDiagnostic::format(std::string_view source_name) const {
  std::ostringstream os;
  os << source_name << ':' << span.line << ':' << span.column << ": "
     << (severity == Severity::error ? "error" : "warning") << ": " << message;
  return os.str();
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class TokenKind { word, lbrace, rbrace, newline, eof };

struct Token {
  TokenKind kind;
  std::string_view text;
  SourceSpan span;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  std::size_t line_start = 0;
  std::size_t i = 0;
  auto span_at = [&](std::size_t pos, std::size_t len) {
    return SourceSpan{line, static_cast<int>(pos - line_start) + 1, pos, len};
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      out.push_back({TokenKind::newline, src.substr(i, 1), span_at(i, 1)});
      ++i;
      ++line;
      line_start = i;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '{' || c == '}') {
      out.push_back({c == '{' ? TokenKind::lbrace : TokenKind::rbrace, src.substr(i, 1), span_at(i, 1)});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < src.size() && src[i] != '\n' && src[i] != '#' && src[i] != ' ' && src[i] != '\t' &&
             src[i] != '\r' && src[i] != '{' && src[i] != '}') {
        ++i;
      }
      out.push_back({TokenKind::word, src.substr(start, i - start), span_at(start, i - start)});
    }
  }
  out.push_back({TokenKind::eof, {}, span_at(src.size(), 0)});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  ParseResult run() {
    std::vector<Event> events = block(0, nullptr);
    check_acquire(events);
    ParseResult result;
    result.diagnostics = std::move(diags_);
    bool failed = false;
    for (const auto& d : result.diagnostics) failed |= d.severity == Severity::error;
    if (!failed) result.program = PulseProgram{std::move(events)};
    return result;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_ == tokens_.size() - 1 ? pos_ : pos_++]; }

  void error(const SourceSpan& span, std::string message) {
    diags_.push_back({Severity::error, std::move(message), span});
  }

  static bool ends_statement(TokenKind k) { return k != TokenKind::word; }

  std::vector<Token> arguments() {
    std::vector<Token> args;
    while (peek().kind == TokenKind::word) args.push_back(next());
    return args;
  }

  std::optional<double> number(const Token& t, const char* what) {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      error(t.span, std::string("malformed number for ") + what + ": '" + std::string(t.text) + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long long> integer(const Token& t, const char* what) {
    long long v = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      error(t.span, std::string("malformed integer for ") + what + ": '" + std::string(t.text) + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<PulseTarget> target(const Token& t) {
    if (t.text == "CC") return PulseTarget::cc;
    if (t.text == "CS") return PulseTarget::cs;
    if (t.text == "ALL") return PulseTarget::all;
    error(t.span, "unknown target '" + std::string(t.text) + "' (expected CC, CS or ALL)");
    return std::nullopt;
  }

  bool arity(const Token& keyword, const std::vector<Token>& args, std::size_t expected,
             const char* usage) {
    if (args.size() == expected) return true;
    SourceSpan span = keyword.span;
    if (args.size() > expected) span = args[expected].span;
    error(span, std::string("expected `") + usage + "`, got " + std::to_string(args.size()) +
                    " argument(s)");
    return false;
  }

  // Parses statements until EOF (depth 0) or the closing brace of a repeat.
  std::vector<Event> block(int depth, const Token* opener) {
    std::vector<Event> events;
    for (;;) {
      const Token& t = peek();
      switch (t.kind) {
        case TokenKind::newline:
          next();
          continue;
        case TokenKind::eof:
          if (opener) {
            error(t.span, "unbalanced braces: missing '}' for repeat opened at line " +
                              std::to_string(opener->span.line) + ", column " +
                              std::to_string(opener->span.column));
          }
          return events;
        case TokenKind::rbrace:
          next();
          if (opener) return events;
          error(t.span, "unbalanced braces: '}' without a matching repeat");
          continue;
        case TokenKind::lbrace:
          next();
          error(t.span, "unexpected '{' (only repeat opens a block)");
          continue;
        case TokenKind::word:
          statement(depth, events);
          continue;
      }
    }
  }

  void statement(int depth, std::vector<Event>& events) {
    const Token kw = next();
    std::vector<Token> args = arguments();
    const std::size_t errors_before = diags_.size();
    auto emit = [&](auto payload) {
      if (diags_.size() == errors_before) events.push_back({payload, kw.span});
    };

    if (kw.text == "pulse") {
      if (!arity(kw, args, 3, "pulse <CC|CS|ALL> <phi_deg> <theta_deg>")) return;
      auto tg = target(args[0]);
      auto phi = number(args[1], "phase");
      auto theta = number(args[2], "angle");
      if (tg && phi && theta) emit(PulseEvent{*tg, *phi, *theta});
    } else if (kw.text == "zrot") {
      if (!arity(kw, args, 2, "zrot <CC|CS|ALL> <theta_deg>")) return;
      auto tg = target(args[0]);
      auto theta = number(args[1], "angle");
      if (tg && theta) emit(VirtualZEvent{*tg, *theta});
    } else if (kw.text == "delay") {
      if (!arity(kw, args, 1, "delay <ms>")) return;
      auto ms = number(args[0], "delay");
      if (ms && *ms < 0.0) error(args[0].span, "delay must be >= 0");
      else if (ms) emit(DelayEvent{*ms});
    } else if (kw.text == "decouple") {
      if (!arity(kw, args, 1, "decouple <none|selective|full>")) return;
      try {
        emit(DecoupleEvent{parse_decoupling_mode(args[0].text)});
      } catch (const std::invalid_argument&) {
        error(args[0].span, "unknown decoupling mode '" + std::string(args[0].text) +
                                "' (expected none, selective or full)");
      }
    } else if (kw.text == "acquire") {
      if (!arity(kw, args, 2, "acquire <points> <dwell_ms>")) return;
      auto points = integer(args[0], "points");
      auto dwell = number(args[1], "dwell");
      if (points && (*points < 2 || *points > (1 << 24))) {
        error(args[0].span, "acquire needs between 2 and 16777216 points");
      } else if (dwell && !(*dwell > 0.0)) {
        error(args[1].span, "dwell must be > 0");
      } else if (points && dwell) {
        emit(AcquireEvent{static_cast<int>(*points), *dwell});
      }
      if (depth > 0) error(kw.span, "acquire is not allowed inside a repeat block");
    } else if (kw.text == "repeat") {
      repeat(kw, args, depth, events);
    } else {
      error(kw.span, "unknown keyword '" + std::string(kw.text) + "'");
    }
  }

  void repeat(const Token& kw, const std::vector<Token>& args, int depth, std::vector<Event>& events) {
    const std::size_t errors_before = diags_.size();
    std::optional<long long> count;
    if (arity(kw, args, 1, "repeat <n> {")) {
      count = integer(args[0], "repeat count");
      if (count && *count < 1) error(args[0].span, "repeat count must be >= 1");
      if (count && *count > 1000000) error(args[0].span, "repeat count too large");
    }
    if (peek().kind != TokenKind::lbrace) {
      error(peek().kind == TokenKind::eof || peek().kind == TokenKind::newline ? kw.span : peek().span,
            "expected '{' after repeat count");
      return;
    }
    const Token opener = next();
    if (depth + 1 > kMaxRepeatDepth) {
      error(kw.span, "repeat nesting deeper than " + std::to_string(kMaxRepeatDepth));
    }
    std::vector<Event> body = block(depth + 1, &opener);
    if (diags_.size() == errors_before && count) {
      events.push_back({RepeatEvent{static_cast<int>(*count), std::move(body)}, kw.span});
    }
  }

  void check_acquire(const std::vector<Event>& events) {
    const Event* first = nullptr;
    for (const auto& e : events) {
      if (!std::holds_alternative<AcquireEvent>(e.kind)) continue;
      if (first) error(e.span, "duplicate acquire (first one at line " + std::to_string(first->span.line) + ")");
      else first = &e;
    }
    bool acquire_seen = false;
    for (const auto& d : diags_) acquire_seen |= d.message.rfind("acquire", 0) == 0;
    if (!first) {
      // An acquire statement that failed to parse was already reported.
      if (!acquire_seen && !acquire_keyword_present()) {
        error(tokens_.back().span, "missing acquire: a program must end with `acquire <points> <dwell_ms>`");
      }
      return;
    }
    if (&events.back() != first && std::holds_alternative<AcquireEvent>(first->kind)) {
      const Event* after = first + 1;
      error(after->span, "statement after acquire (acquire must be last)");
    }
  }

  bool acquire_keyword_present() const {
    for (const auto& t : tokens_) {
      if (t.kind == TokenKind::word && t.text == "acquire") return true;
    }
    return false;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<ParseDiagnostic> diags_;
};


void print_events(std::ostringstream& os, const std::vector<Event>& events, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (const auto& e : events) {
    os << pad;
    std::visit(
        [&](const auto& ev) {
          using T = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<T, PulseEvent>) {
            os << "pulse " << to_string(ev.target) << ' ' << format_quantity(ev.phi_deg) << ' '
               << format_quantity(ev.theta_deg) << '\n';
          } else if constexpr (std::is_same_v<T, VirtualZEvent>) {
            os << "zrot " << to_string(ev.target) << ' ' << format_quantity(ev.theta_deg) << '\n';
          } else if constexpr (std::is_same_v<T, DelayEvent>) {
            os << "delay " << format_quantity(ev.ms) << '\n';
          } else if constexpr (std::is_same_v<T, DecoupleEvent>) {
            os << "decouple " << to_string(ev.mode) << '\n';
          } else if constexpr (std::is_same_v<T, RepeatEvent>) {
            os << "repeat " << ev.count << " {\n";
            print_events(os, ev.body, indent + 1);
            os << pad << "}\n";
          } else {
            os << "acquire " << ev.points << ' ' << format_quantity(ev.dwell_ms) << '\n';
          }
        },
        e.kind);
  }
}

}  // namespace

ParseResult parse_pulse_program(std::string_view text) { return Parser(text).run(); }

std::string print_pulse_program(const PulseProgram& program) {
  std::ostringstream os;
  print_events(os, program.events, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Expansion

namespace {

// (-180, 180]; values already inside are returned unchanged.
double wrap_degrees(double deg) {
  if (deg > -180.0 && deg <= 180.0) return deg;
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

struct Expander {
  double frame_cc = 0.0;
  double frame_cs = 0.0;
  std::vector<Event> out;

  void advance(PulseTarget t, double theta) {
    if (t != PulseTarget::cs) frame_cc = wrap_degrees(frame_cc + theta);
    if (t != PulseTarget::cc) frame_cs = wrap_degrees(frame_cs + theta);
  }

  void pulse(const PulseEvent& p, const SourceSpan& span) {
    auto shifted = [&](PulseTarget t, double frame) {
      out.push_back({PulseEvent{t, wrap_degrees(p.phi_deg - frame), p.theta_deg}, span});
    };
    switch (p.target) {
      case PulseTarget::cc: shifted(PulseTarget::cc, frame_cc); break;
      case PulseTarget::cs: shifted(PulseTarget::cs, frame_cs); break;
      case PulseTarget::all:
        if (frame_cc == frame_cs) {
          shifted(PulseTarget::all, frame_cc);
        } else {
          shifted(PulseTarget::cc, frame_cc);
          shifted(PulseTarget::cs, frame_cs);
        }
        break;
    }
  }

  void flush_frame(const SourceSpan& span) {
    if (frame_cc != 0.0 && frame_cc == frame_cs) {
      out.push_back({VirtualZEvent{PulseTarget::all, frame_cc}, span});
    } else {
      if (frame_cc != 0.0) out.push_back({VirtualZEvent{PulseTarget::cc, frame_cc}, span});
      if (frame_cs != 0.0) out.push_back({VirtualZEvent{PulseTarget::cs, frame_cs}, span});
    }
    frame_cc = frame_cs = 0.0;
  }

  void walk(const std::vector<Event>& events) {
    for (const auto& e : events) {
      std::visit(
          [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, PulseEvent>) {
              pulse(ev, e.span);
            } else if constexpr (std::is_same_v<T, VirtualZEvent>) {
              advance(ev.target, ev.theta_deg);
            } else if constexpr (std::is_same_v<T, RepeatEvent>) {
              for (int k = 0; k < ev.count; ++k) walk(ev.body);
            } else if constexpr (std::is_same_v<T, AcquireEvent>) {
              flush_frame(e.span);
              out.push_back(e);
            } else {
              out.push_back(e);
            }
          },
          e.kind);
    }
  }
};

}  // namespace

ExpandedProgram expand(const PulseProgram& program) {
  Expander x;
  x.walk(program.events);
  ExpandedProgram result;
  result.program.events = std::move(x.out);
  result.duration_s = result.program.duration_s();
  return result;
}

// ---------------------------------------------------------------------------
// Builtin sequences

std::string_view to_string(BuiltinSequence sequence) {
  switch (sequence) {
    case BuiltinSequence::field_on_cc: return "field_on_cc";
    case BuiltinSequence::field_on_cs: return "field_on_cs";
    case BuiltinSequence::xy8_sense: return "xy8_sense";
  }
  return "?";
}

BuiltinSequence parse_builtin_sequence(std::string_view name) {
  for (auto s : {BuiltinSequence::field_on_cc, BuiltinSequence::field_on_cs, BuiltinSequence::xy8_sense}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown sequence '" + std::string(name) +
                              "' (expected field_on_cc, field_on_cs or xy8_sense)");
}

SequenceParams SequenceParams::for_system(const SpinSystem& system, CnotMode mode) {
  SequenceParams p;
  p.entangling_delay_ms = entangling_delay(system, mode) * 1e3;
  return p;
}

namespace {

class ProgramBuilder {
 public:
  ProgramBuilder& pulse(PulseTarget t, double phi, double theta) { return add(PulseEvent{t, phi, theta}); }
  ProgramBuilder& zrot(PulseTarget t, double theta) { return add(VirtualZEvent{t, theta}); }
  ProgramBuilder& delay(double ms) { return add(DelayEvent{ms}); }
  ProgramBuilder& decouple(DecouplingMode m) { return add(DecoupleEvent{m}); }
  ProgramBuilder& acquire(int points, double dwell_ms) { return add(AcquireEvent{points, dwell_ms}); }

  // CNOT = e^{-i pi/4} Z_C(-90) Z_S(-90) R_S(0, 90) U_E R_S(90, 90); the
  // rightmost factor is played first.
  ProgramBuilder& cnot(double ue_ms) {
    pulse(PulseTarget::cs, 90.0, 90.0);
    delay(ue_ms);
    pulse(PulseTarget::cs, 0.0, 90.0);
    zrot(PulseTarget::cs, -90.0);
    return zrot(PulseTarget::cc, -90.0);
  }

  template <class T>
  ProgramBuilder& add(T payload) {
    events_.push_back({std::move(payload), {}});
    return *this;
  }

  ProgramBuilder& repeat(int count, PulseProgram body) {
    events_.push_back({RepeatEvent{count, std::move(body.events)}, {}});
    return *this;
  }

  PulseProgram build() { return PulseProgram{std::move(events_)}; }

 private:
  std::vector<Event> events_;
};

}  // namespace

PulseProgram builtin_sequence(BuiltinSequence sequence, const SequenceParams& p) {
  if (!(p.tau_ms > 0.0)) throw std::invalid_argument("builtin sequence: tau must be > 0");
  if (p.n_cycles < 1) throw std::invalid_argument("builtin sequence: n_cycles must be >= 1");
  if (!(p.entangling_delay_ms > 0.0)) throw std::invalid_argument("builtin sequence: entangling delay must be > 0");
  const bool switch_env = p.sensing_mode != DecouplingMode::full;

  ProgramBuilder b;
  b.decouple(DecouplingMode::full);
  b.pulse(PulseTarget::cc, -90.0, 90.0);
  if (sequence == BuiltinSequence::field_on_cc) b.zrot(PulseTarget::cc, p.theta_deg);
  b.cnot(p.entangling_delay_ms);
  if (switch_env) b.decouple(p.sensing_mode);

  if (sequence == BuiltinSequence::xy8_sense) {
    // X Y X Y Y X Y X, evenly spaced: d/2 - pi - d - pi - ... - pi - d/2.
    static constexpr double kPhases[8] = {0, 90, 0, 90, 90, 0, 90, 0};
    ProgramBuilder cycle;
    const double d = p.tau_ms;
    cycle.delay(d / 2);
    for (int k = 0; k < 8; ++k) {
      cycle.pulse(p.xy8_target, kPhases[k], 180.0);
      cycle.delay(k == 7 ? d / 2 : d);
    }
    b.repeat(p.n_cycles, cycle.build());
  } else {
    b.delay(p.tau_ms / 2).pulse(PulseTarget::cs, 0.0, 180.0).delay(p.tau_ms / 2);
  }
  // The side-spin phase is imprinted after the refocusing pulse; before it,
  // the pulse would invert its sign.
  if (sequence != BuiltinSequence::field_on_cc) b.zrot(PulseTarget::cs, p.theta_deg);

  if (switch_env) b.decouple(DecouplingMode::full);
  b.cnot(p.entangling_delay_ms);
  b.acquire(p.acquire_points, p.dwell_ms);
  return b.build();
}

}  // namespace starsense
