#include <acnet/ingest.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>

namespace acnet {

namespace {

constexpr std::size_t kChunkBytes = 1 << 16;

bool is_ws(int c) noexcept { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

std::optional<std::string> scalar_string(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  return std::nullopt;
}

std::optional<std::int32_t> parse_year(const nlohmann::json& j) {
  std::int64_t y = 0;
  if (j.is_number_integer() || j.is_number_unsigned()) {
    y = j.get<std::int64_t>();
  } else if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d != static_cast<double>(static_cast<std::int64_t>(d))) return std::nullopt;
    y = static_cast<std::int64_t>(d);
  } else if (j.is_string()) {
    const std::string s = trim(j.get<std::string>());
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), y);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (y <= 0 || y >= kNoYear) return std::nullopt;
  return static_cast<std::int32_t>(y);
}

const nlohmann::json* member(const nlohmann::json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (auto it = obj.find(k); it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

}  // namespace

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

InputFormat parse_input_format(std::string_view s) {
  if (s == "auto") return InputFormat::Auto;
  if (s == "array") return InputFormat::Array;
  if (s == "ndjson") return InputFormat::Ndjson;
  throw std::invalid_argument("unknown input format '" + std::string(s) + "' (expected auto|array|ndjson)");
}

V14Reader::V14Reader(std::istream& in, InputFormat format) : in_(in), format_(format), chunk_(kChunkBytes) {}

int V14Reader::get() {
  if (pos_ == len_) {
    if (!in_) return -1;
    in_.read(chunk_.data(), static_cast<std::streamsize>(chunk_.size()));
    len_ = static_cast<std::size_t>(in_.gcount());
    pos_ = 0;
    if (in_.bad()) throw std::runtime_error("unreadable input stream");
    stats_.bytes_read += len_;
    if (len_ == 0) return -1;
  }
  return static_cast<unsigned char>(chunk_[pos_++]);
}

int V14Reader::peek() {
  const int c = get();
  if (c >= 0) --pos_;
  return c;
}

int V14Reader::skip_ws() {
  int c = peek();
  while (c >= 0 && is_ws(c)) {
    get();
    c = peek();
  }
  return c;
}

void V14Reader::detect() {
  started_ = true;
  int c = skip_ws();
  if (c == 0xEF) {  // UTF-8 byte order mark
    get();
    if (get() != 0xBB || get() != 0xBF) throw DataError("corrupt byte order mark");
    c = skip_ws();
  }
  if (c < 0) {
    done_ = true;
    return;
  }
  InputFormat seen;
  if (c == '[') {
    seen = InputFormat::Array;
    get();
  } else if (c == '{') {
    seen = InputFormat::Ndjson;
  } else {
    throw DataError("top-level structure is neither a JSON array nor lines of JSON objects");
  }
  if (format_ != InputFormat::Auto && format_ != seen) {
    throw DataError(format_ == InputFormat::Array ? "expected a JSON array" : "expected newline-delimited JSON");
  }
  format_ = seen;
}

bool V14Reader::frame_array_element(std::string& out) {
  out.clear();
  int c;
  for (;;) {
    c = skip_ws();
    if (c == ',') {
      get();
      continue;
    }
    break;
  }
  if (c < 0 || c == ']') {
    done_ = true;
    return false;
  }
  if (c != '{' && c != '[') {
    // Scalar element: consume up to the next separator; it decodes as malformed.
    while ((c = peek()) >= 0 && c != ',' && c != ']') out.push_back(static_cast<char>(get()));
    return true;
  }
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  while ((c = get()) >= 0) {
    out.push_back(static_cast<char>(c));
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) break;
    }
  }
  return true;  // a truncated tail is returned as-is and fails to decode
}

bool V14Reader::frame_line(std::string& out) {
  for (;;) {
    out.clear();
    int c;
    bool any = false;
    while ((c = get()) >= 0 && c != '\n') {
      out.push_back(static_cast<char>(c));
      any = true;
    }
    if (c < 0 && !any) {
      done_ = true;
      return false;
    }
    if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
    if (c < 0) {
      done_ = true;
      return false;
    }
  }
}

std::optional<PaperRecord> V14Reader::decode(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    ++stats_.skipped_malformed;
    return std::nullopt;
  }
  PaperRecord r;
  if (const auto* id = member(j, {"id", "_id"})) {
    if (auto s = scalar_string(*id)) r.paper_id = trim(*s);
  }
  if (r.paper_id.empty()) {
    ++stats_.skipped_missing_id;
    return std::nullopt;
  }
  const auto* year = member(j, {"year"});
  const auto parsed_year = year ? parse_year(*year) : std::nullopt;
  if (!parsed_year) {
    ++stats_.skipped_missing_year;
    return std::nullopt;
  }
  r.year = *parsed_year;

  if (const auto* authors = member(j, {"authors"}); authors && authors->is_array()) {
    for (const auto& a : *authors) {
      std::string id;
      if (a.is_object()) {
        if (const auto* aid = member(a, {"id", "_id"})) {
          if (auto s = scalar_string(*aid)) id = trim(*s);
        }
        if (id.empty()) {
          if (const auto* name = member(a, {"name"}); name && name->is_string()) {
            const std::string n = trim(name->get<std::string>());
            if (!n.empty()) id = "name:" + n;
          }
        }
      } else if (a.is_string()) {
        id = trim(a.get<std::string>());
      }
      if (!id.empty()) r.author_ids.push_back(std::move(id));
    }
  }
  if (const auto* fos = member(j, {"fos"}); fos && fos->is_array()) {
    for (const auto& f : *fos) {
      std::string name;
      if (f.is_string()) {
        name = trim(f.get<std::string>());
      } else if (f.is_object()) {
        if (const auto* n = member(f, {"name"}); n && n->is_string()) name = trim(n->get<std::string>());
      }
      if (!name.empty()) r.topic_names.push_back(std::move(name));
    }
  }
  if (const auto* refs = member(j, {"references"}); refs && refs->is_array()) {
    for (const auto& ref : *refs) {
      if (auto s = scalar_string(ref)) {
        std::string t = trim(*s);
        if (!t.empty()) r.reference_ids.push_back(std::move(t));
      }
    }
  }
  return r;
}

bool V14Reader::next(PaperRecord& out) {
  if (!started_) detect();
  while (!done_) {
    const bool framed = format_ == InputFormat::Array ? frame_array_element(record_) : frame_line(record_);
    if (!framed) break;
    stats_.max_record_bytes = std::max<std::uint64_t>(stats_.max_record_bytes, record_.size());
    stats_.peak_record_buffer = std::max<std::uint64_t>(stats_.peak_record_buffer, record_.capacity());
    if (auto r = decode(record_)) {
      ++stats_.records_parsed;
      out = std::move(*r);
      return true;
    }
    ++stats_.records_skipped;
  }
  return false;
}

std::vector<PaperRecord> parse_v14_stream(std::istream& in, InputFormat format, ParseStats* stats) {
  V14Reader reader(in, format);
  std::vector<PaperRecord> out;
  PaperRecord r;
  while (reader.next(r)) out.push_back(std::move(r));
  if (stats) *stats = reader.stats();
  return out;
}

void GraphIngestor::add(const PaperRecord& r) {
  if (builder_.find(NodeType::Paper, r.paper_id)) {
    ++stats_.duplicate_records;
    return;
  }
  const NodeRef p = builder_.add_paper(r.paper_id, r.year);
  for (const auto& a : r.author_ids) builder_.add_edge(Relation::Writes, builder_.add_node(NodeType::Author, a), p);
  for (const auto& t : r.topic_names) {
    builder_.add_edge(Relation::DealsWith, p, builder_.add_node(NodeType::Topic, t));
  }
  for (const auto& ref : r.reference_ids) {
    if (auto q = builder_.find(NodeType::Paper, ref)) {
      builder_.add_edge(Relation::Cites, p, *q);
    } else {
      pending_refs_.emplace_back(p.index, ref);
    }
  }
}

std::pair<HeteroTemporalGraph, IngestStats> GraphIngestor::finish(const ParseStats& parse) {
  for (const auto& [src, ref] : pending_refs_) {
    if (auto q = builder_.find(NodeType::Paper, ref)) {
      builder_.add_edge(Relation::Cites, paper(src), *q);
    } else {
      ++stats_.dangling_references;
    }
  }
  pending_refs_.clear();
  HeteroTemporalGraph g = builder_.build();
  stats_.parse = parse;
  for (NodeType t : kAllNodeTypes) stats_.nodes[to_index(t)] = g.node_count(t);
  for (Relation rel : kAllRelations) stats_.edges[to_index(rel)] = g.edge_count(rel);
  return {std::move(g), stats_};
}

std::pair<HeteroTemporalGraph, IngestStats> build_graph(std::span<const PaperRecord> records) {
  GraphIngestor ing;
  for (const auto& r : records) ing.add(r);
  ParseStats ps;
  ps.records_parsed = records.size();
  return ing.finish(ps);
}

std::pair<HeteroTemporalGraph, IngestStats> ingest_stream(std::istream& in, InputFormat format) {
  V14Reader reader(in, format);
  GraphIngestor ing;
  PaperRecord r;
  while (reader.next(r)) ing.add(r);
  return ing.finish(reader.stats());
}

std::string ingest_stats_json(const IngestStats& s) {
  nlohmann::ordered_json j;
  j["records_parsed"] = s.parse.records_parsed;
  j["records_skipped"] = s.parse.records_skipped;
  j["skipped_malformed"] = s.parse.skipped_malformed;
  j["skipped_missing_id"] = s.parse.skipped_missing_id;
  j["skipped_missing_year"] = s.parse.skipped_missing_year;
  j["duplicate_records"] = s.duplicate_records;
  j["dangling_references"] = s.dangling_references;
  j["bytes_read"] = s.parse.bytes_read;
  j["max_record_bytes"] = s.parse.max_record_bytes;
  for (NodeType t : kAllNodeTypes) j["nodes"][std::string(to_string(t))] = s.nodes[to_index(t)];
  for (Relation r : kAllRelations) j["edges"][std::string(to_string(r))] = s.edges[to_index(r)];
  return j.dump(2);
}

}  // namespace acnet
