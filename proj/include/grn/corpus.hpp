#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grn/rhyme.hpp"
#include "grn/rng.hpp"
#include "grn/vocab.hpp"

namespace grn {

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

inline bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

// Lowercase, split on whitespace, detach leading/trailing punctuation as
// separate tokens; internal apostrophes and hyphens stay inside the word.
inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string raw;
  while (is >> raw) {
    std::string tok = lowercase(raw);
    std::size_t begin = 0, end = tok.size();
    while (begin < end && !is_word_char(tok[begin])) ++begin;
    while (end > begin && !is_word_char(tok[end - 1])) --end;
    if (begin == end) {  // punctuation-only chunk
      for (char c : tok) out.push_back(std::string(1, c));
      continue;
    }
    for (std::size_t i = 0; i < begin; ++i) out.push_back(std::string(1, tok[i]));
    out.push_back(tok.substr(begin, end - begin));
    for (std::size_t i = end; i < tok.size(); ++i) out.push_back(std::string(1, tok[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quatrain
// ---------------------------------------------------------------------------

// Four verses of word/punctuation tokens; markers are added on flattening.
struct Quatrain {
  std::vector<std::vector<std::string>> verses;

  int word_count() const {
    int n = 0;
    for (const auto& v : verses) n += static_cast<int>(v.size());
    return n;
  }

  // Full token sequence with <eov> after verses 1-3 and <eoq> at the end.
  std::vector<std::string> flatten() const {
    std::vector<std::string> out;
    for (std::size_t v = 0; v < verses.size(); ++v) {
      out.insert(out.end(), verses[v].begin(), verses[v].end());
      out.push_back(v + 1 == verses.size() ? special_token_text(kEoq)
                                           : special_token_text(kEov));
    }
    return out;
  }

  int flat_length() const {
    return word_count() + static_cast<int>(verses.size());
  }

  // Maps a flat word index (marker positions excluded) to (verse, offset).
  std::pair<int, int> locate_word(int word_index) const {
    int w = word_index;
    for (std::size_t v = 0; v < verses.size(); ++v) {
      if (w < static_cast<int>(verses[v].size())) return {static_cast<int>(v), w};
      w -= static_cast<int>(verses[v].size());
    }
    throw std::invalid_argument("Quatrain: word index out of range");
  }

  const std::string& word(int word_index) const {
    auto [v, i] = locate_word(word_index);
    return verses[v][i];
  }

  void set_word(int word_index, const std::string& w) {
    auto [v, i] = locate_word(word_index);
    verses[v][i] = w;
  }

  std::vector<std::string> end_words() const {
    std::vector<std::string> out;
    for (const auto& v : verses) out.push_back(end_word(v));
    return out;
  }

  bool operator==(const Quatrain& other) const { return verses == other.verses; }
};

// Trims trailing tokens from the longest verses until the flattened
// sequence (markers included) fits max_len. Keeps at least one token per
// verse and all four markers.
inline void truncate_quatrain(Quatrain& q, int max_len = 50) {
  while (q.flat_length() > max_len) {
    std::size_t longest = 0;
    for (std::size_t v = 1; v < q.verses.size(); ++v)
      if (q.verses[v].size() > q.verses[longest].size()) longest = v;
    if (q.verses[longest].size() <= 1) break;
    q.verses[longest].pop_back();
  }
}

// ---------------------------------------------------------------------------
// Corpus file parsing
// ---------------------------------------------------------------------------

// One blank-line-separated block of a corpus file.
struct CorpusRecord {
  std::string author;  // empty = unknown
  std::optional<std::string> scheme_hint;
  std::vector<std::vector<std::string>> verses;
};

inline std::vector<CorpusRecord> parse_corpus_stream(std::istream& is,
                                                     const std::string& source = "<stream>") {
  std::vector<CorpusRecord> records;
  CorpusRecord current;
  bool open = false;
  int lineno = 0;
  std::string line;
  auto flush = [&] {
    if (open && !current.verses.empty()) records.push_back(current);
    current = CorpusRecord{};
    open = false;
  };
  while (std::getline(is, line)) {
    ++lineno;
    std::string trimmed = line;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
      trimmed.pop_back();
    if (trimmed.empty()) {
      flush();
      continue;
    }
    if (trimmed[0] == '#') {
      auto colon = trimmed.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(source + ":" + std::to_string(lineno) +
                                 ": malformed header directive: " + trimmed);
      std::string key = trimmed.substr(1, colon - 1);
      std::string value = trimmed.substr(colon + 1);
      while (!value.empty() && value.front() == ' ') value.erase(value.begin());
      if (key == "author")
        current.author = value;
      else if (key == "scheme")
        current.scheme_hint = value;
      else
        throw std::runtime_error(source + ":" + std::to_string(lineno) +
                                 ": unknown header directive: " + key);
      open = true;
      continue;
    }
    auto toks = tokenize(trimmed);
    if (!toks.empty()) {
      current.verses.push_back(std::move(toks));
      open = true;
    }
  }
  flush();
  return records;
}

inline std::vector<CorpusRecord> parse_corpus_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("parse_corpus_file: cannot open " + path);
  return parse_corpus_stream(is, path);
}

// Consecutive non-overlapping groups of 4 verses; remainder discarded.
inline std::vector<Quatrain> split_quatrains(
    const std::vector<std::vector<std::string>>& verses) {
  if (verses.empty()) throw std::invalid_argument("split_quatrains: empty stanza");
  std::vector<Quatrain> out;
  for (std::size_t i = 0; i + 4 <= verses.size(); i += 4) {
    Quatrain q;
    q.verses.assign(verses.begin() + i, verses.begin() + i + 4);
    out.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct DatasetRecord {
  int author_id = 0;
  std::string scheme;
  int scheme_id = 0;
  Quatrain quatrain;
};

struct Dataset {
  std::vector<DatasetRecord> records;
  Vocab vocab;
  std::vector<std::string> authors;  // index = author id; index 0 = "<unknown>"
  std::vector<std::string> schemes;  // index = scheme id

  int scheme_id(const std::string& label) const {
    auto it = std::find(schemes.begin(), schemes.end(), label);
    if (it == schemes.end())
      throw std::invalid_argument("Dataset: unknown scheme " + label);
    return static_cast<int>(it - schemes.begin());
  }
};

struct IngestOptions {
  int vocab_cap = 50000;
  int max_len = 50;
  int top_authors = 768;
  bool discard_abcd = true;
};

struct IngestStats {
  long quatrains_kept = 0;
  long quatrains_discarded = 0;
  std::map<std::string, long> scheme_histogram;
};

// Scheme assignment or discard for one quatrain.
inline std::optional<std::string> assign_scheme(const RhymeJudge& judge,
                                                const Quatrain& q,
                                                bool discard_abcd = true) {
  std::vector<std::string> ends;
  try {
    ends = q.end_words();
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // verse without an alphabetic token
  }
  std::string label = label_scheme(judge, ends);
  bool any_pair = label != "ABCD";
  if (discard_abcd && !any_pair) return std::nullopt;
  return label;
}

// Top-n authors by record count get ids 1..n; everyone else id 0.
inline std::map<std::string, int> bucket_authors(const std::vector<std::pair<std::string, long>>& counts,
                                                 int top_n = 768) {
  std::vector<std::pair<std::string, long>> ranked = counts;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::map<std::string, int> ids;
  int next = 1;
  for (const auto& [name, _] : ranked) {
    if (next > top_n) break;
    if (name.empty()) continue;
    ids[name] = next++;
  }
  return ids;
}

inline Dataset build_dataset(const std::vector<CorpusRecord>& corpus,
                             const RhymeJudge& judge,
                             const IngestOptions& opts = {},
                             IngestStats* stats = nullptr) {
  struct Labeled {
    std::string author;
    std::string scheme;
    Quatrain q;
  };
  std::vector<Labeled> kept;
  std::map<std::string, long> author_counts;
  IngestStats local;
  for (const auto& rec : corpus) {
    for (auto& q0 : split_quatrains(rec.verses)) {
      Quatrain q = q0;
      truncate_quatrain(q, opts.max_len);
      auto scheme = rec.scheme_hint ? rec.scheme_hint
                                    : assign_scheme(judge, q, opts.discard_abcd);
      if (!scheme) {
        ++local.quatrains_discarded;
        continue;
      }
      kept.push_back({rec.author, *scheme, std::move(q)});
      ++author_counts[rec.author];
      ++local.scheme_histogram[*scheme];
      ++local.quatrains_kept;
    }
  }

  std::map<std::string, long> token_counts;
  for (const auto& item : kept)
    for (const auto& verse : item.q.verses)
      for (const auto& tok : verse) ++token_counts[tok];

  Dataset ds;
  ds.vocab = Vocab::build(token_counts, opts.vocab_cap);

  std::vector<std::pair<std::string, long>> ac(author_counts.begin(), author_counts.end());
  auto author_ids = bucket_authors(ac, opts.top_authors);
  ds.authors.push_back("<unknown>");
  {
    std::vector<std::pair<int, std::string>> ordered;
    for (const auto& [name, id] : author_ids) ordered.emplace_back(id, name);
    std::sort(ordered.begin(), ordered.end());
    for (const auto& [id, name] : ordered) ds.authors.push_back(name);
  }

  std::map<std::string, long> scheme_counts;
  for (const auto& item : kept) ++scheme_counts[item.scheme];
  for (const auto& [label, _] : scheme_counts) ds.schemes.push_back(label);

  for (auto& item : kept) {
    DatasetRecord r;
    auto it = author_ids.find(item.author);
    r.author_id = it == author_ids.end() ? 0 : it->second;
    r.scheme = item.scheme;
    r.scheme_id = ds.scheme_id(item.scheme);
    r.quatrain = std::move(item.q);
    ds.records.push_back(std::move(r));
  }
  if (stats) *stats = local;
  return ds;
}

// Seed-deterministic shuffle then split into disjoint, exhaustive parts.
inline std::array<std::vector<DatasetRecord>, 3> split_dataset(
    const std::vector<DatasetRecord>& records, double train_ratio,
    double val_ratio, double test_ratio, std::uint64_t seed) {
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-6)
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  if (records.size() < 3)
    throw std::invalid_argument("split_dataset: need at least 3 records");
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.index(i)]);
  std::size_t n = records.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(train_ratio * n));
  std::size_t n_val = static_cast<std::size_t>(std::llround(val_ratio * n));
  n_train = std::min(n_train, n - 2);
  if (n_train == 0) n_train = 1;
  if (n_val == 0) n_val = 1;
  if (n_train + n_val >= n) n_val = n - n_train - 1;
  std::array<std::vector<DatasetRecord>, 3> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[idx[i]];
    if (i < n_train)
      out[0].push_back(r);
    else if (i < n_train + n_val)
      out[1].push_back(r);
    else
      out[2].push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset serialization (one record per line, tab-separated)
// ---------------------------------------------------------------------------

inline std::string serialize_record(const DatasetRecord& r) {
  std::ostringstream os;
  os << r.author_id << '\t' << r.scheme << '\t';
  auto flat = r.quatrain.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) os << (i ? " " : "") << flat[i];
  return os.str();
}

inline DatasetRecord deserialize_record(const std::string& line) {
  auto t1 = line.find('\t');
  auto t2 = line.find('\t', t1 + 1);
  if (t1 == std::string::npos || t2 == std::string::npos)
    throw std::runtime_error("deserialize_record: malformed line: " + line);
  DatasetRecord r;
  r.author_id = std::stoi(line.substr(0, t1));
  r.scheme = line.substr(t1 + 1, t2 - t1 - 1);
  std::istringstream toks(line.substr(t2 + 1));
  std::string tok;
  std::vector<std::string> verse;
  while (toks >> tok) {
    if (tok == special_token_text(kEov) || tok == special_token_text(kEoq)) {
      r.quatrain.verses.push_back(verse);
      verse.clear();
    } else {
      verse.push_back(tok);
    }
  }
  if (!verse.empty())
    throw std::runtime_error("deserialize_record: missing end-of-quatrain marker");
  return r;
}

inline void save_records(const std::vector<DatasetRecord>& records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_records: cannot open " + path);
  for (const auto& r : records) os << serialize_record(r) << '\n';
}

inline std::vector<DatasetRecord> load_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_records: cannot open " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(deserialize_record(line));
  return out;
}

// Sidecar tables: vocab as "token<TAB>frequency" in id order (specials
// included), authors and schemes as one name per line in id order.
inline void save_vocab(const Vocab& v, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_vocab: cannot open " + path);
  for (std::size_t i = 0; i < v.size(); ++i)
    os << v.token(static_cast<int>(i)) << '\t' << v.frequency(static_cast<int>(i)) << '\n';
}

inline Vocab load_vocab(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_vocab: cannot open " + path);
  std::map<std::string, long> counts;
  std::vector<std::pair<std::string, long>> ordered;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_vocab: malformed line: " + line);
    ordered.emplace_back(line.substr(0, tab), std::stol(line.substr(tab + 1)));
  }
  // Reconstruct through Vocab::build; frequencies preserve the ranking.
  for (std::size_t i = kNumSpecial; i < ordered.size(); ++i)
    counts[ordered[i].first] = ordered[i].second;
  Vocab v = Vocab::build(counts, static_cast<int>(ordered.size()));
  for (std::size_t i = 0; i < ordered.size(); ++i)
    if (v.token(static_cast<int>(i)) != ordered[i].first)
      throw std::runtime_error("load_vocab: file ordering is not frequency-canonical at " +
                               ordered[i].first);
  return v;
}

inline void save_string_table(const std::vector<std::string>& table, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_string_table: cannot open " + path);
  for (const auto& s : table) os << s << '\n';
}

inline std::vector<std::string> load_string_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_string_table: cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline void save_dataset(const Dataset& ds, const std::string& dir) {
  save_records(ds.records, dir + "/records.tsv");
  save_vocab(ds.vocab, dir + "/vocab.tsv");
  save_string_table(ds.authors, dir + "/authors.txt");
  save_string_table(ds.schemes, dir + "/schemes.txt");
}

inline Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  ds.records = load_records(dir + "/records.tsv");
  ds.vocab = load_vocab(dir + "/vocab.tsv");
  ds.authors = load_string_table(dir + "/authors.txt");
  ds.schemes = load_string_table(dir + "/schemes.txt");
  for (auto& r : ds.records) r.scheme_id = ds.scheme_id(r.scheme);
  return ds;
}

}  // namespace grn
