#include "modelfuzz/targets.hpp"

#include <atomic>
#include <cassert>
#include <stdexcept>

// The built-in target suite. Each target is a pure function over its input
// bytes, hand-instrumented with Tracer::block() at every basic block. Block 0
// is the virtual entry predecessor, so even an empty input yields one edge.
// Planted bugs mimic ordinary developer errors; docs/targets.md lists each
// target's wire format and bug conditions.

namespace modelfuzz {
namespace {

std::atomic<std::uint64_t> g_execution_count{0};

// --- tlv-parser ------------------------------------------------------------
// [0xD7][0x01] stream header, then [type:1][len:1][value:len] records; at
// most 3 records are processed and the rest of the packet is ignored.
//   type 1: byte counter    type 2: text scan
//   type 3: pair            type 4: checksum accumulate
// Bug A: a type-3 record with len == 0 indexes value[len-1].
// Bug B: a second type-4 record that lands the running sum exactly on 0xFF.
void run_tlv_parser(std::span<const std::uint8_t> in, Tracer& t) {
  t.block(1);
  if (in.size() < 2 || in[0] != 0xD7) {
    t.block(21);  // not a TLV8 stream
    return;
  }
  t.block(22);
  if (in[1] != 0x01) {
    t.block(23);  // unsupported version
    return;
  }
  t.block(24);
  std::size_t pos = 2;
  int records = 0;
  bool saturated_counter = false;
  bool control_text = false;
  bool nul_pair = false;
  std::uint8_t check_acc = 0;
  int check_records = 0;
  while (pos < in.size()) {
    if (records == 3) {
      t.block(20);  // record quota, trailing bytes ignored
      break;
    }
    t.block(2);
    if (pos + 2 > in.size()) {
      t.block(4);  // header cut off
      return;
    }
    const std::uint8_t type = in[pos];
    const std::uint8_t len = in[pos + 1];
    pos += 2;
    if (pos + len > in.size()) {
      t.block(5);  // value cut off
      return;
    }
    const auto value = in.subspan(pos, len);
    pos += len;
    ++records;
    switch (type) {
      case 1:
        t.block(6);
        for (std::uint8_t b : value) {
          if (b >= 0xF0) saturated_counter = true;
        }
        break;
      case 2:
        t.block(8);
        for (std::uint8_t b : value) {
          if (b < 0x20) control_text = true;
        }
        break;
      case 3:
        t.block(11);
        if (len == 0) {
          t.crash(12);  // value[len - 1] with len == 0
          return;
        }
        for (std::uint8_t b : value) {
          if (b == 0x00) nul_pair = true;
        }
        break;
      case 4:
        t.block(15);
        for (std::uint8_t b : value) {
          check_acc = static_cast<std::uint8_t>(check_acc + b);
        }
        ++check_records;
        if (check_records >= 2 && check_acc == 0xFF) {
          t.crash(16);  // accumulator collision path left unhandled
          return;
        }
        break;
      default:
        break;  // unrecognized record types are skipped
    }
  }
  if (saturated_counter) {
    t.block(7);
  }
  if (control_text) {
    t.block(9);
  }
  if (nul_pair) {
    t.block(13);
  }
  t.block(19);
}

// --- csv-splitter ----------------------------------------------------------
// A "sep=," dialect line, then comma-separated fields, newline-separated
// rows, double-quoted fields. At
// most 2 rows of at most 3 fields each are split; extra commas fold into
// the last field and extra rows are ignored. Closing a quote copies the
// quoted content out of a fixed 32-byte scratch buffer.
// Bug A: input that ends inside a quoted field after >= 3 fields in the row.
// Bug B: closing a quoted field longer than the scratch buffer.
void run_csv_splitter(std::span<const std::uint8_t> in, Tracer& t) {
  t.block(1);
  static constexpr std::uint8_t kDialect[6] = {'s', 'e', 'p', '=', ',', '\n'};
  for (int i = 0; i < 6; ++i) {
    if (in.size() <= static_cast<std::size_t>(i) || in[i] != kDialect[i]) {
      t.block(20 + i);  // dialect line missing or malformed
      return;
    }
  }
  in = in.subspan(6);
  t.block(26);
  bool in_quote = false;
  bool saw_quote = false;
  bool empty_field = false;
  bool wide_field = false;
  std::size_t field_len = 0;
  std::size_t quoted_len = 0;
  int fields_in_row = 0;
  int rows = 0;
  for (std::uint8_t c : in) {
    if (rows == 2) {
      t.block(17);  // row quota, rest ignored
      break;
    }
    if (in_quote) {
      if (c == '"') {
        if (quoted_len > 32) {
          t.crash(13);  // copy-out overruns the scratch buffer
          return;
        }
        in_quote = false;
      } else {
        ++quoted_len;
        ++field_len;
      }
    } else if (c == ',') {
      if (fields_in_row < 3) {
        t.block(2);
        if (field_len == 0) empty_field = true;
        if (field_len > 8) wide_field = true;
        ++fields_in_row;
        field_len = 0;
      } else {
        ++field_len;  // folded into the last field
      }
    } else if (c == '\n') {
      t.block(3);
      ++rows;
      fields_in_row = 0;
      field_len = 0;
    } else if (c == '"' && field_len == 0) {
      t.block(6);  // quote opens a field
      in_quote = true;
      saw_quote = true;
      quoted_len = 0;
    } else {
      ++field_len;
    }
  }
  if (in_quote) {
    if (fields_in_row >= 3) {
      t.crash(10);  // unterminated quote flushes a stale row pointer
      return;
    }
    t.block(11);
  }
  if (saw_quote) {
    t.block(5);
  }
  if (empty_field) {
    t.block(15);
  }
  if (wide_field) {
    t.block(16);
  }
  t.block(12);  // final row flush
  t.block(14);
}

// --- checksum-header -------------------------------------------------------
// [0xC5][0x11][version:1][len:1][payload:len][checksum:1], checksum is the
// byte sum of the payload. Payload is a list of [tag:1][val:1] entries.
// Bug A: version 0x7F passes the checksum gate but has no dispatch arm.
// Bug B: a tag-4 entry with val == 0 divides by it.
void run_checksum_header(std::span<const std::uint8_t> in, Tracer& t) {
  t.block(1);
  if (in.empty() || in[0] != 0xC5) {
    t.block(3);
    return;
  }
  t.block(2);
  if (in.size() < 2 || in[1] != 0x11) {
    t.block(5);
    return;
  }
  t.block(4);
  if (in.size() < 4) {
    t.block(7);
    return;
  }
  const std::uint8_t version = in[2];
  const std::uint8_t len = in[3];
  if (4 + static_cast<std::size_t>(len) + 1 > in.size()) {
    t.block(7);  // truncated packet
    return;
  }
  t.block(6);
  const auto payload = in.subspan(4, len);
  std::uint8_t sum = 0;
  for (std::uint8_t b : payload) sum = static_cast<std::uint8_t>(sum + b);
  t.block(8);
  if (sum != in[4 + len]) {
    t.block(10);
    return;
  }
  t.block(9);
  if (version == 0x7F) {
    t.crash(11);  // reserved version falls through the dispatch
    return;
  }
  if (version == 1) {
    t.block(13);
  } else if (version == 2) {
    t.block(14);
  } else {
    t.block(15);
  }
  std::size_t pos = 0;
  while (pos + 2 <= payload.size()) {
    t.block(12);
    const std::uint8_t tag = payload[pos];
    const std::uint8_t val = payload[pos + 1];
    pos += 2;
    switch (tag) {
      case 1:
        t.block(16);
        break;
      case 2:
        t.block(17);
        break;
      case 3:
        t.block(18);
        break;
      case 4:
        if (val == 0) {
          t.crash(19);  // scale = 256 / val
          return;
        }
        t.block(20);
        break;
      default:
        t.block(21);
        break;
    }
  }
  if (pos < payload.size()) {
    t.block(22);  // odd trailing byte
  }
  t.block(23);
}

// --- state-machine ---------------------------------------------------------
// Commands over a session: 'H' hello, 'A'+key auth (key 0x42), 'D'+len+data,
// 'R' reset, 'Q' quit. States: init -> greeted -> authed -> streaming, plus
// closed. At most 4 commands are served per session.
// Bug A: zero-length 'D' while already streaming.
// Bug B: 'R' after the session was closed.
void run_state_machine(std::span<const std::uint8_t> in, Tracer& t) {
  enum State { kInit, kGreeted, kAuthed, kStreaming, kClosed };
  t.block(1);
  if (in.empty() || in[0] != 'H') {
    t.block(19);  // session must open with a hello
    return;
  }
  State state = kInit;
  std::size_t pos = 0;
  int commands = 0;
  bool binary_chunk = false;
  while (pos < in.size()) {
    if (commands == 4) {
      t.block(18);  // command quota, connection dropped
      break;
    }
    const std::uint8_t cmd = in[pos++];
    if (cmd != 'H' && cmd != 'A' && cmd != 'D' && cmd != 'R' && cmd != 'Q') {
      continue;  // unknown bytes are ignored
    }
    t.block(2);
    ++commands;
    switch (cmd) {
      case 'H':
        if (state == kInit) {
          t.block(3);
          state = kGreeted;
        } else {
          t.block(4);  // protocol error, ignored
        }
        break;
      case 'A': {
        if (state != kGreeted || pos >= in.size()) {
          t.block(4);
          break;
        }
        const std::uint8_t key = in[pos++];
        if ((key ^ 0x13) == 0x51) {
          t.block(5);
          state = kAuthed;
        } else {
          t.block(6);
        }
        break;
      }
      case 'D': {
        if (state != kAuthed && state != kStreaming) {
          t.block(4);
          break;
        }
        if (pos >= in.size()) {
          t.block(7);
          return;
        }
        const std::uint8_t len = in[pos++];
        if (len == 0) {
          if (state == kStreaming) {
            t.crash(12);  // chunk append assumes a nonempty buffer
            return;
          }
          t.block(8);
          state = kStreaming;
          break;
        }
        if (pos + len > in.size()) {
          t.block(7);  // truncated chunk
          return;
        }
        t.block(9);
        for (std::size_t i = 0; i < len; ++i) {
          if (in[pos + i] >= 0x80) binary_chunk = true;
        }
        pos += len;
        state = kStreaming;
        break;
      }
      case 'R':
        if (state == kClosed) {
          t.crash(13);  // reset touches the freed session
          return;
        }
        t.block(14);
        state = kInit;
        break;
      case 'Q':
        t.block(15);
        state = kClosed;
        break;
      default:
        break;
    }
  }
  if (binary_chunk) {
    t.block(10);
  }
  t.block(17);
}

// --- expr-eval -------------------------------------------------------------
// Arithmetic over integers: + - * / ( ) and unary minus, recursion depth
// capped at 8, at most 6 grammar nodes, values reduced mod 1000003.
// Bug A: an evaluated division whose divisor is zero.
// Bug B: a numeric literal longer than 6 digits.
struct ExprParser {
  std::span<const std::uint8_t> in;
  Tracer& t;
  std::size_t pos = 0;
  int nodes = 0;
  bool failed = false;

  bool done() const { return pos >= in.size(); }
  std::uint8_t peek() const { return in[pos]; }

  long expr(int depth) {
    if (depth > 8 || ++nodes > 6) {
      t.block(18);
      failed = true;
      return 0;
    }
    long value = term(depth);
    while (!failed && !done() && (peek() == '+' || peek() == '-')) {
      const std::uint8_t op = peek();
      ++pos;
      const long rhs = term(depth);
      if (failed) return 0;
      t.block(3);
      value = op == '+' ? (value + rhs) % 1000003 : (value - rhs) % 1000003;
    }
    return value;
  }

  long term(int depth) {
    long value = factor(depth);
    while (!failed && !done() && (peek() == '*' || peek() == '/')) {
      const std::uint8_t op = peek();
      ++pos;
      const long rhs = factor(depth);
      if (failed) return 0;
      if (op == '*') {
        t.block(6);
        value = (value * rhs) % 1000003;
      } else {
        if (rhs == 0) {
          t.crash(8);  // quotient = value / rhs
          failed = true;
          return 0;
        }
        t.block(7);
        value = value / rhs;
      }
    }
    return value;
  }

  long factor(int depth) {
    t.block(10);
    if (depth > 8 || ++nodes > 6) {
      t.block(18);
      failed = true;
      return 0;
    }
    if (done()) {
      t.block(19);
      failed = true;
      return 0;
    }
    const std::uint8_t c = peek();
    if (c >= '0' && c <= '9') {
      t.block(11);
      long value = 0;
      int digits = 0;
      while (!done() && peek() >= '0' && peek() <= '9') {
        value = value * 10 + (peek() - '0');
        value %= 1000003;
        ++digits;
        ++pos;
      }
      if (digits > 6) {
        t.crash(12);  // parsed into a fixed-width field
        failed = true;
        return 0;
      }
      return value;
    }
    if (c == '(') {
      t.block(14);
      ++pos;
      const long value = expr(depth + 1);
      if (failed) return 0;
      if (done() || peek() != ')') {
        t.block(16);
        failed = true;
        return 0;
      }
      t.block(15);
      ++pos;
      return value;
    }
    if (c == '-') {
      t.block(17);
      ++pos;
      const long value = factor(depth + 1);
      return failed ? 0 : -value;
    }
    t.block(19);  // unexpected character
    failed = true;
    return 0;
  }
};

void run_expr_eval(std::span<const std::uint8_t> in, Tracer& t) {
  t.block(1);
  ExprParser parser{in, t};
  parser.expr(0);
  if (t.crashed()) return;
  if (parser.failed) return;
  if (parser.done()) {
    t.block(20);
  } else {
    t.block(21);  // trailing junk
  }
}

// --- magic-gate ------------------------------------------------------------
// "FUZZ" magic, then [len:1][payload:len].
// Bug: a length byte larger than the remaining payload.
void run_magic_gate(std::span<const std::uint8_t> in, Tracer& t) {
  t.block(1);
  static constexpr std::uint8_t kMagic[4] = {'F', 'U', 'Z', 'Z'};
  for (int i = 0; i < 4; ++i) {
    if (in.size() <= static_cast<std::size_t>(i) || in[i] != kMagic[i]) {
      t.block(6);
      return;
    }
    t.block(2 + i);
  }
  if (in.size() < 5) {
    t.block(8);  // no length byte
    return;
  }
  const std::uint8_t len = in[4];
  const std::size_t remaining = in.size() - 5;
  if (len > remaining) {
    t.crash(9);  // copy reads past the buffer
    return;
  }
  t.block(7);
  if (len == 0) {
    t.block(13);
  } else if (in[5] == '!') {
    t.block(11);
  } else {
    t.block(12);
  }
  if (len >= 8) {
    t.block(10);
  }
  t.block(14);
}

Bytes bytes_of(std::initializer_list<int> values) {
  Bytes out;
  out.reserve(values.size());
  for (int v : values) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

Bytes bytes_of(const char* text) {
  return Bytes(text, text + std::char_traits<char>::length(text));
}

std::vector<Target> build_suite() {
  std::vector<Target> suite;
  suite.push_back(Target{
      TargetDescriptor{
          "tlv-parser",
          "length-prefixed type/len/value record parser",
          48,
          {
              bytes_of({0xD7, 0x01, 0x01, 0x02, 'h', 'i', 0x02, 0x01, 'x'}),
              bytes_of({0xD7, 0x01, 0x03, 0x02, 0x00, 0x01}),
              bytes_of({0xD7, 0x01, 0x04, 0x03, 'a', 'b', 'c'}),
          },
      },
      run_tlv_parser,
      64,
  });
  suite.push_back(Target{
      TargetDescriptor{
          "csv-splitter",
          "comma/newline record splitter with quoted fields",
          48,
          {
              bytes_of("sep=,\na,b,c\n1,22,333\n"),
              bytes_of("sep=,\nx,\"q,q\",z\n"),
              bytes_of("sep=,\none\n"),
          },
      },
      run_csv_splitter,
      64,
  });
  suite.push_back(Target{
      TargetDescriptor{
          "checksum-header",
          "checksum-gated binary header with tagged payload entries",
          48,
          {
              bytes_of({0xC5, 0x11, 0x01, 0x04, 0x01, 0x41, 0x02, 0x42, 0x86}),
              bytes_of({0x00}),
              bytes_of({0xC5, 0x11, 0x02, 0x02, 0x03, 0x07, 0x0A}),
          },
      },
      run_checksum_header,
      96,
  });
  suite.push_back(Target{
      TargetDescriptor{
          "state-machine",
          "session protocol: hello, auth, data chunks, reset, quit",
          48,
          {
              bytes_of("H"),
              bytes_of({'H', 'A', 0x42, 'D', 0x02, 'o', 'k', 'Q'}),
              bytes_of("HR"),
          },
      },
      run_state_machine,
      64,
  });
  suite.push_back(Target{
      TargetDescriptor{
          "expr-eval",
          "integer arithmetic expression evaluator",
          32,
          {
              bytes_of("1+2*3"),
              bytes_of("(44-2)/7"),
              bytes_of("-5+(6)"),
          },
      },
      run_expr_eval,
      96,
  });
  suite.push_back(Target{
      TargetDescriptor{
          "magic-gate",
          "magic-byte gate with a shallow length-check bug",
          32,
          {
              bytes_of("FUZZ\x03"
                       "abc"),
              bytes_of({'F', 'U', 'Z', 'Z', 0x00}),
              bytes_of("nope"),
          },
      },
      run_magic_gate,
      16,
  });
  return suite;
}

}  // namespace

const std::vector<Target>& target_suite() {
  static const std::vector<Target> suite = build_suite();
  return suite;
}

std::vector<TargetDescriptor> list_targets() {
  std::vector<TargetDescriptor> out;
  for (const Target& t : target_suite()) out.push_back(t.descriptor);
  return out;
}

const Target& find_target(const std::string& name) {
  for (const Target& t : target_suite()) {
    if (t.descriptor.name == name) return t;
  }
  throw std::invalid_argument("no such target");
}

ExecutionTrace execute(const Target& target, const Bytes& input) {
  g_execution_count.fetch_add(1, std::memory_order_relaxed);
  const std::size_t len =
      std::min(input.size(), target.descriptor.max_input_len);
  Tracer tracer;
  target.run(std::span<const std::uint8_t>(input.data(), len), tracer);
  ExecutionTrace trace = std::move(tracer).take();
  assert(!trace.edges.empty());
  assert(trace.edges.size() <= target.trace_cap);
  return trace;
}

ExecutionTrace execute(const std::string& target_name, const Bytes& input) {
  return execute(find_target(target_name), input);
}

std::uint64_t execution_count() {
  return g_execution_count.load(std::memory_order_relaxed);
}

}  // namespace modelfuzz
