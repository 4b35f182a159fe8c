#include "hapcompass/transport/codec.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::transport {

namespace {

void require_finite(const json& j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw std::invalid_argument("envelope payload contains a non-finite number");
  }
  if (j.is_structured()) {
    for (const auto& v : j) require_finite(v);
  }
}

json envelope_object(const Envelope& e) {
  if (e.kind.empty()) throw std::invalid_argument("envelope kind must not be empty");
  if (!e.payload.is_object()) throw std::invalid_argument("envelope payload must be an object");
  require_finite(e.payload);
  return {{"seq", e.seq}, {"t_send", e.t_send}, {"kind", e.kind}, {"payload", e.payload}};
}

Envelope envelope_from(const json& j, std::size_t at) {
  if (!j.is_object()) throw DecodeError(at, "frame is not a JSON object");
  if (j.size() != 4) throw DecodeError(at, "frame must have exactly seq, t_send, kind and payload");
  const auto seq = j.find("seq");
  const auto t = j.find("t_send");
  const auto kind = j.find("kind");
  const auto payload = j.find("payload");
  if (seq == j.end() || !seq->is_number_unsigned()) throw DecodeError(at, "seq must be a non-negative integer");
  if (t == j.end() || !t->is_number_integer()) throw DecodeError(at, "t_send must be an integer");
  if (t->is_number_unsigned() && t->get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw DecodeError(at, "t_send out of range");
  }
  if (kind == j.end() || !kind->is_string() || kind->get_ref<const std::string&>().empty()) {
    throw DecodeError(at, "kind must be a non-empty string");
  }
  if (payload == j.end() || !payload->is_object()) throw DecodeError(at, "payload must be an object");
  return {seq->get<std::uint64_t>(), t->get<std::int64_t>(), kind->get<std::string>(), *payload};
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t& pos, int bytes) {
  if (in.size() - pos < static_cast<std::size_t>(bytes)) throw DecodeError(in.size(), "truncated binary frame");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[pos + static_cast<std::size_t>(i)]) << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

}  // namespace

std::string encode(const Envelope& e) {
  std::string line = envelope_object(e).dump(-1, ' ', false, json::error_handler_t::strict);
  line.push_back('\n');
  return line;
}

Envelope decode(std::string_view frame) {
  const std::size_t nl = frame.find('\n');
  if (nl == std::string_view::npos) throw DecodeError(frame.size(), "truncated frame (no terminating newline)");
  if (nl + 1 != frame.size()) throw DecodeError(nl + 1, "bytes after the terminating newline");
  json j;
  try {
    j = json::parse(frame.begin(), frame.begin() + static_cast<std::ptrdiff_t>(nl));
  } catch (const json::parse_error& err) {
    throw DecodeError(err.byte > 0 ? err.byte - 1 : 0, err.what());
  }
  return envelope_from(j, 0);
}

std::vector<std::uint8_t> encode_binary(const Envelope& e) {
  envelope_object(e);
  if (e.kind.size() > 0xFFFF) throw std::invalid_argument("envelope kind too long");
  const std::vector<std::uint8_t> body = json::to_msgpack(e.payload);
  std::vector<std::uint8_t> out{'H', 'C'};
  const std::size_t length = 8 + 8 + 2 + e.kind.size() + body.size();
  if (length > 0xFFFFFFFFu) throw std::invalid_argument("envelope too large");
  put_le(out, length, 4);
  put_le(out, e.seq, 8);
  put_le(out, static_cast<std::uint64_t>(e.t_send), 8);
  put_le(out, e.kind.size(), 2);
  out.insert(out.end(), e.kind.begin(), e.kind.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Envelope decode_binary(std::span<const std::uint8_t> in) {
  if (in.size() < 2) throw DecodeError(in.size(), "truncated binary frame");
  if (in[0] != 'H' || in[1] != 'C') throw DecodeError(0, "bad magic");
  std::size_t pos = 2;
  const std::uint64_t length = get_le(in, pos, 4);
  if (in.size() - pos < length) throw DecodeError(in.size(), "truncated binary frame");
  if (in.size() - pos > length) throw DecodeError(pos + length, "bytes after the frame body");
  Envelope e;
  e.seq = get_le(in, pos, 8);
  e.t_send = static_cast<std::int64_t>(get_le(in, pos, 8));
  const std::size_t kind_len = get_le(in, pos, 2);
  if (kind_len == 0) throw DecodeError(pos, "empty kind");
  if (in.size() - pos < kind_len) throw DecodeError(in.size(), "truncated kind");
  e.kind.assign(reinterpret_cast<const char*>(in.data() + pos), kind_len);
  pos += kind_len;
  try {
    e.payload = json::from_msgpack(in.begin() + static_cast<std::ptrdiff_t>(pos), in.end());
  } catch (const json::exception& err) {
    throw DecodeError(pos, err.what());
  }
  if (!e.payload.is_object()) throw DecodeError(pos, "payload must be an object");
  return e;
}

std::optional<std::string> LineFramer::next_line() {
  const std::size_t nl = buffer_.find('\n');
  if (nl == std::string::npos) {
    if (buffer_.size() > max_line_) throw DecodeError(buffer_.size(), "line exceeds the maximum frame size");
    return std::nullopt;
  }
  std::string line = buffer_.substr(0, nl + 1);
  buffer_.erase(0, nl + 1);
  return line;
}

std::optional<SeqTracker::Gap> SeqTracker::observe(const std::string& kind, std::uint64_t seq) {
  const auto it = next_.find(kind);
  if (it == next_.end()) {
    next_.emplace(kind, seq + 1);
    return std::nullopt;
  }
  std::optional<Gap> gap;
  if (seq != it->second) {
    gap = Gap{kind, it->second, seq};
    ++gaps_;
  }
  it->second = seq + 1;
  return gap;
}

std::uint64_t SeqCounter::next(std::string_view kind) {
  auto it = next_.find(kind);
  if (it == next_.end()) it = next_.emplace(std::string(kind), 0).first;
  return it->second++;
}

}  // namespace hapcompass::transport
