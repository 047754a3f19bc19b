#include "inferalign/midi/smf.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <utility>

namespace inferalign::midi {

namespace {

void put_u16(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(Bytes& out, std::uint32_t v) {
  put_u16(out, v >> 16);
  put_u16(out, v & 0xFFFF);
}

struct ChannelEvent {
  std::int64_t tick;
  bool on;
  int pitch;
  int velocity;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw SmfParseError(std::string("truncated ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u16(const char* what) {
    need(2, what);
    const std::uint32_t v = (data_[pos_] << 8) | data_[pos_ + 1];
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    const std::uint32_t hi = u16(what);
    return (hi << 16) | u16(what);
  }
  std::uint32_t vlq() {
    try {
      return read_vlq(data_, pos_);
    } catch (const std::out_of_range&) {
      throw SmfParseError("truncated variable-length quantity", pos_);
    }
  }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }
  bool tag(std::string_view expected) const {
    if (remaining() < 4) return false;
    return std::equal(expected.begin(), expected.end(), data_.begin() + pos_,
                      [](char c, std::uint8_t b) { return static_cast<std::uint8_t>(c) == b; });
  }
  std::span<const std::uint8_t> view(std::size_t n) const { return data_.subspan(pos_, n); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

struct TrackResult {
  Notes notes;
  std::optional<std::pair<std::int64_t, std::uint32_t>> first_tempo;  // (tick, micros)
};

TrackResult parse_track(std::span<const std::uint8_t> chunk, std::size_t base) {
  TrackResult result;
  Reader in(chunk);
  std::int64_t tick = 0;
  std::uint8_t running = 0;
  // Open note-ons per (channel, pitch), oldest first.
  std::map<std::pair<int, int>, std::deque<std::pair<std::int64_t, int>>> open;

  auto close = [&](int channel, int pitch, std::int64_t at) {
    auto it = open.find({channel, pitch});
    if (it == open.end() || it->second.empty()) return;
    const auto [onset, velocity] = it->second.front();
    it->second.pop_front();
    result.notes.push_back({onset, std::max<std::int64_t>(1, at - onset), pitch, velocity});
  };

  try {
    while (in.remaining() > 0) {
      tick += in.vlq();
      std::uint8_t status = in.u8("event");
      std::optional<std::uint8_t> first_data;
      if (status < 0x80) {
        if (running == 0) throw SmfParseError("data byte without running status", in.pos() - 1);
        first_data = status;
        status = running;
      }

      if (status == 0xFF) {
        const std::uint8_t type = in.u8("meta type");
        const std::uint32_t len = in.vlq();
        in.need(len, "meta event");
        if (type == 0x51 && len == 3 && !result.first_tempo) {
          const auto d = in.view(3);
          result.first_tempo = {{tick, (std::uint32_t{d[0]} << 16) | (d[1] << 8) | d[2]}};
        }
        in.skip(len, "meta event");
        if (type == 0x2F) break;
        continue;
      }
      if (status == 0xF0 || status == 0xF7) {
        in.skip(in.vlq(), "sysex");
        running = 0;
        continue;
      }
      if (status >= 0xF0) throw SmfParseError("unsupported system message", in.pos() - 1);

      running = status;
      const int kind = status >> 4;
      const int channel = status & 0x0F;
      const int data_len = (kind == 0xC || kind == 0xD) ? 1 : 2;
      std::uint8_t data[2] = {0, 0};
      for (int i = 0; i < data_len; ++i) {
        data[i] = (i == 0 && first_data) ? *first_data : in.u8("channel message");
      }

      if (kind == 0x9 && data[1] > 0) {
        open[{channel, data[0] & 0x7F}].emplace_back(tick, data[1]);
      } else if (kind == 0x8 || kind == 0x9) {
        close(channel, data[0] & 0x7F, tick);
      }
    }
  } catch (const SmfParseError& e) {
    throw SmfParseError(e.message(), base + e.offset());
  }

  for (auto& [key, queue] : open) {
    while (!queue.empty()) close(key.first, key.second, tick);
  }
  return result;
}

}  // namespace

SmfParseError::SmfParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), message_(what), offset_(offset) {}

std::uint32_t bpm_to_micros(double bpm) {
  return static_cast<std::uint32_t>(std::lround(60'000'000.0 / bpm));
}

std::optional<double> ParsedSmf::bpm() const {
  if (!micros_per_quarter || *micros_per_quarter == 0) return std::nullopt;
  return 60'000'000.0 / *micros_per_quarter;
}

void write_vlq(Bytes& out, std::uint32_t value) {
  value &= 0x0FFFFFFF;
  std::uint8_t buf[4];
  int n = 0;
  buf[n++] = value & 0x7F;
  while ((value >>= 7) > 0) buf[n++] = static_cast<std::uint8_t>((value & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

std::uint32_t read_vlq(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    if (pos >= bytes.size()) throw std::out_of_range("vlq");
    const std::uint8_t b = bytes[pos++];
    value = (value << 7) | (b & 0x7F);
    if ((b & 0x80) == 0) return value;
  }
  return value;
}

EncodedSmf notes_to_smf(std::span<const NoteEvent> input, int ppq, double bpm) {
  EncodedSmf result;
  Notes notes(input.begin(), input.end());
  sort_notes(notes);

  // Same-pitch overlaps: cut the earlier note at the later onset.
  std::map<int, std::size_t> last_of_pitch;
  std::vector<bool> dropped(notes.size(), false);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const auto it = last_of_pitch.find(notes[i].pitch);
    if (it != last_of_pitch.end()) {
      auto& prev = notes[it->second];
      if (prev.onset + prev.duration > notes[i].onset) {
        ++result.truncated_notes;
        prev.duration = notes[i].onset - prev.onset;
        if (prev.duration <= 0) dropped[it->second] = true;
      }
    }
    last_of_pitch[notes[i].pitch] = i;
  }

  std::vector<ChannelEvent> events;
  events.reserve(notes.size() * 2);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (dropped[i]) continue;
    const auto& n = notes[i];
    const int pitch = std::clamp(n.pitch, 0, 127);
    events.push_back({n.onset, true, pitch, std::clamp(n.velocity, 1, 127)});
    events.push_back({n.onset + std::max<std::int64_t>(1, n.duration), false, pitch, 0});
  }
  std::stable_sort(events.begin(), events.end(), [](const ChannelEvent& a, const ChannelEvent& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.on != b.on) return !a.on;  // offs first
    return a.pitch < b.pitch;
  });

  Bytes track;
  write_vlq(track, 0);
  const std::uint32_t micros = bpm_to_micros(bpm);
  track.insert(track.end(), {0xFF, 0x51, 0x03});
  track.push_back((micros >> 16) & 0xFF);
  track.push_back((micros >> 8) & 0xFF);
  track.push_back(micros & 0xFF);

  std::int64_t now = 0;
  for (const auto& e : events) {
    write_vlq(track, static_cast<std::uint32_t>(e.tick - now));
    now = e.tick;
    track.push_back(e.on ? 0x90 : 0x80);
    track.push_back(static_cast<std::uint8_t>(e.pitch));
    track.push_back(static_cast<std::uint8_t>(e.velocity));
  }
  write_vlq(track, 0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  Bytes& out = result.bytes;
  out.reserve(22 + track.size());
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint32_t>(ppq));
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return result;
}

ParsedSmf parse_smf(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (!in.tag("MThd")) throw SmfParseError("missing MThd header", 0);
  in.skip(4, "header");
  const std::uint32_t header_len = in.u32("header length");
  if (header_len < 6) throw SmfParseError("header chunk too short", 4);
  const std::size_t header_body = in.pos();

  ParsedSmf parsed;
  parsed.format = static_cast<int>(in.u16("format"));
  const std::uint32_t ntracks = in.u16("track count");
  const std::uint32_t division = in.u16("division");
  if (parsed.format > 1) throw SmfParseError("unsupported SMF format " + std::to_string(parsed.format), header_body);
  if (division & 0x8000) throw SmfParseError("SMPTE time division is not supported", header_body + 4);
  if (division == 0) throw SmfParseError("zero ticks per quarter", header_body + 4);
  parsed.ppq = static_cast<int>(division);
  in.skip(header_len - 6, "header");

  std::optional<std::pair<std::int64_t, std::uint32_t>> tempo;
  std::uint32_t tracks_seen = 0;
  while (in.remaining() > 0 && tracks_seen < ntracks) {
    const std::size_t chunk_start = in.pos();
    if (in.remaining() < 8) throw SmfParseError("truncated chunk header", chunk_start);
    const bool is_track = in.tag("MTrk");
    in.skip(4, "chunk tag");
    const std::uint32_t len = in.u32("chunk length");
    if (in.remaining() < len) throw SmfParseError("chunk length exceeds file size", chunk_start + 4);
    if (is_track) {
      auto track = parse_track(in.view(len), in.pos());
      std::move(track.notes.begin(), track.notes.end(), std::back_inserter(parsed.notes));
      if (track.first_tempo && (!tempo || track.first_tempo->first < tempo->first)) tempo = track.first_tempo;
      ++tracks_seen;
    }
    in.skip(len, "chunk");
  }
  if (tracks_seen < ntracks) throw SmfParseError("missing MTrk chunk", in.pos());

  if (tempo) parsed.micros_per_quarter = tempo->second;
  sort_notes(parsed.notes);
  return parsed;
}

Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write to " + path);
}

}  // namespace inferalign::midi
