#include "malmas/llm/heuristic.hpp"

#include <cctype>
#include <set>

#include <fmt/format.h>

#include "malmas/common/rng.hpp"
#include "malmas/dsl/render.hpp"

namespace malmas::llm {

using agents::Role;
namespace mk = dsl::make;

int requested_count(std::string_view text, int fallback) {
  const auto at = text.rfind("exactly ");
  if (at == std::string_view::npos) return fallback;
  int n = 0;
  std::size_t i = at + 8;
  bool any = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    n = n * 10 + (text[i++] - '0');
    any = true;
    if (n > 100) break;
  }
  return any && n > 0 ? n : fallback;
}

namespace {

std::string ident(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out.insert(0, "c");
  return out;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

struct Draft {
  std::string name;
  std::string description;
  dsl::Expr body;
};

std::pair<std::string, std::string> two(Rng& rng, const std::vector<std::string>& cols) {
  const std::size_t i = rng.below(cols.size());
  std::size_t j = rng.below(cols.size() - 1);
  if (j >= i) ++j;
  return {cols[i], cols[j]};
}

}  // namespace

HeuristicBackend::HeuristicBackend(std::vector<data::ColumnSchema> schema, std::uint64_t seed,
                                   std::shared_ptr<TokenLedger> ledger)
    : ChatBackend(std::move(ledger)), schema_(std::move(schema)), seed_(seed) {
  for (const auto& c : schema_) {
    switch (c.kind) {
      case data::ColumnKind::numeric:
      case data::ColumnKind::boolean: numeric_.push_back(c.name); break;
      case data::ColumnKind::categorical: categorical_.push_back(c.name); break;
      case data::ColumnKind::datetime: datetime_.push_back(c.name); break;
    }
  }
}

std::string HeuristicBackend::proposals(Role role, int count, std::uint64_t seed) const {
  Rng rng(seed);
  const auto& num = numeric_;
  std::vector<Draft> drafts;
  std::set<std::string> seen;

  auto draw = [&]() -> std::optional<Draft> {
    switch (role) {
      case Role::unary: {
        if (num.empty()) return std::nullopt;
        const std::string& c = pick(rng, num);
        static const std::vector<std::string> ops{"log_s", "sqrt_s", "sq", "abs", "recip_s", "zscore", "neg"};
        const std::string& op = pick(rng, ops);
        dsl::Expr e = op == "zscore" ? mk::zscore(mk::col(c)) : mk::unary(*dsl::parse_unary_op(op), mk::col(c));
        return Draft{ident(op + "_" + c), fmt::format("{} of {}", op, c), std::move(e)};
      }
      case Role::cross: {
        if (num.size() < 2) return std::nullopt;
        const auto [a, b] = two(rng, num);
        const int kind = static_cast<int>(rng.below(5));
        if (kind == 4)
          return Draft{ident("max_" + a + "_" + b), fmt::format("larger of {} and {}", a, b),
                       mk::if_then_else(dsl::CmpOp::gt, mk::col(a), mk::col(b), mk::col(a), mk::col(b))};
        const dsl::BinaryOp op = static_cast<dsl::BinaryOp>(kind);
        return Draft{ident(std::string(dsl::name(op)) + "_" + a + "_" + b),
                     fmt::format("{} of {} and {}", dsl::name(op), a, b), mk::binary(op, mk::col(a), mk::col(b))};
      }
      case Role::temporal: {
        if (datetime_.empty()) return std::nullopt;
        if (datetime_.size() >= 2 && rng.below(3) == 0) {
          const auto [a, b] = two(rng, datetime_);
          return Draft{ident("days_" + b + "_to_" + a), fmt::format("days from {} to {}", b, a),
                       mk::elapsed_days(a, b)};
        }
        const std::string& c = pick(rng, datetime_);
        const auto part = static_cast<dsl::DatePartKind>(rng.below(5));
        return Draft{ident(std::string(dsl::name(part)) + "_" + c), fmt::format("{} of {}", dsl::name(part), c),
                     mk::date_part(part, c)};
      }
      case Role::aggregation: {
        if (categorical_.empty() || num.empty()) return std::nullopt;
        const std::string& key = pick(rng, categorical_);
        const std::string& value = pick(rng, num);
        const auto agg = static_cast<dsl::AggOp>(rng.below(5));
        return Draft{ident(std::string(dsl::name(agg)) + "_" + value + "_by_" + key),
                     fmt::format("{} of {} within each {}", dsl::name(agg), value, key),
                     mk::group_agg(agg, key, mk::col(value))};
      }
      case Role::local_transform: {
        if (num.empty()) return std::nullopt;
        const std::string& c = pick(rng, num);
        if (rng.below(2) == 0) {
          static const std::vector<int> bins{4, 5, 8, 10, 16};
          const int n = pick(rng, bins);
          return Draft{ident(fmt::format("bin{}_{}", n, c)), fmt::format("{} equal-width bins of {}", n, c),
                       mk::bin(mk::col(c), n)};
        }
        static const std::vector<double> limits{1.5, 2.0, 3.0};
        const double l = pick(rng, limits);
        return Draft{ident("clipz_" + c), fmt::format("z-score of {} clipped to +-{}", c, l),
                     mk::clip(mk::zscore(mk::col(c)), -l, l)};
      }
      case Role::local_pattern: {
        if (num.size() < 2) return std::nullopt;
        if (num.size() >= 4 && rng.below(3) == 0) {
          const auto [a, b] = two(rng, num);
          std::vector<std::string> rest;
          for (const auto& c : num)
            if (c != a && c != b) rest.push_back(c);
          const auto [c, d] = two(rng, rest);
          return Draft{ident("pick_" + c + "_" + d), fmt::format("{} where {} exceeds {}, else {}", c, a, b, d),
                       mk::if_then_else(dsl::CmpOp::gt, mk::col(a), mk::col(b), mk::col(c), mk::col(d))};
        }
        const int dims = num.size() >= 3 && rng.below(2) ? 3 : 2;
        std::vector<std::string> cols = num;
        rng.shuffle(std::span(cols));
        cols.resize(dims);
        const int k = 2 + static_cast<int>(rng.below(5));
        std::string name = fmt::format("cluster{}", k);
        for (const auto& c : cols) name += "_" + c;
        return Draft{ident(name), fmt::format("k-means cluster (k={}) over {}", k, fmt::join(cols, ", ")),
                     mk::cluster(k, cols)};
      }
    }
    return std::nullopt;
  };

  for (int attempt = 0; attempt < 4 * count && static_cast<int>(drafts.size()) < count; ++attempt) {
    auto d = draw();
    if (!d) break;
    const std::string text = dsl::render(d->body);
    if (seen.insert(text).second) drafts.push_back(std::move(*d));
  }

  std::string out;
  for (const auto& d : drafts) {
    dsl::Program p{d.name, d.body};
    out += fmt::format("```dsl\n# {}\n{}\n```\n", d.description, dsl::render(p));
  }
  return out;
}

ChatResponse HeuristicBackend::do_complete(const ChatRequest& request) {
  const auto tag = Tag::parse(request.tag);
  const std::uint64_t seed = derive_seed(seed_, request.tag);
  const std::string agent = tag ? tag->agent : std::string();
  ChatResponse r;
  if (agent == "router") {
    Rng rng(seed);
    std::vector<std::string> roles;
    for (Role role : agents::kAllRoles) {
      if (role == Role::temporal && datetime_.empty()) continue;
      if (role == Role::aggregation && categorical_.empty()) continue;
      roles.emplace_back(agents::to_string(role));
    }
    rng.shuffle(std::span(roles));
    const std::size_t keep = std::min<std::size_t>(roles.size(), 3 + rng.below(2));
    roles.resize(keep);
    r.content = nlohmann::json(roles).dump();
  } else if (agent.rfind("summary", 0) == 0) {
    Rng rng(seed);
    std::vector<std::string> bullets;
    const std::vector<std::string> templates{
        "- Interactions between pairs of numeric columns were the most reliable gains.",
        "- Monotone rescaling of a single column rarely helps tree models.",
        "- Prefer transformations whose inputs already appear in effective features.",
        "- Avoid repeating transformations that were not effective in earlier rounds.",
        "- Group-level statistics help when a categorical column has few levels."};
    const std::size_t n = 2 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) bullets.push_back(templates[(seed + i) % templates.size()]);
    r.content = fmt::format("{}\n", fmt::join(bullets, "\n"));
  } else if (auto role = agents::parse_role(agent)) {
    r.content = proposals(*role, requested_count(request.joined(), 5), seed);
  } else {
    throw BackendError(BackendError::Kind::config, fmt::format("heuristic backend cannot answer tag \"{}\"", request.tag));
  }
  return r;
}

}  // namespace malmas::llm
