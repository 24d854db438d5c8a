#include "cascadecl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <random>

#include "cascadecl/error.hpp"
#include "cascadecl/training.hpp"

namespace cascadecl {

namespace {

constexpr std::int64_t kEpochBase = 1'500'000'000;

std::string padded(const char* prefix, std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, v);
  return buf;
}

std::int64_t lognormal_count(std::mt19937_64& rng, double mu, double shift) {
  std::normal_distribution<double> n(mu + shift, 1.0);
  return static_cast<std::int64_t>(std::llround(std::exp(n(rng))));
}

std::size_t cascade_count(std::mt19937_64& rng, const RegimeConfig& r) {
  const double extra_mean = r.cascade_mean - 1.0;
  if (extra_mean <= 0.0) return 1;
  double rate = extra_mean;
  if (r.cascade_dispersion > 0.0) {
    std::gamma_distribution<double> gamma(1.0 / r.cascade_dispersion, extra_mean * r.cascade_dispersion);
    rate = gamma(rng);
  }
  if (rate <= 0.0) return 1;
  return 1 + static_cast<std::size_t>(std::poisson_distribution<long long>(rate)(rng));
}

UserProfile make_user(std::mt19937_64& rng, const Id& id, const std::array<double, 8>& s) {
  UserProfile u;
  u.user_id = id;
  const double p_verified = 1.0 / (1.0 + std::exp(-(std::log(0.15 / 0.85) + s[0])));
  u.verified = std::bernoulli_distribution(p_verified)(rng);
  std::normal_distribution<double> months(90.0 + 30.0 * s[1], 30.0);
  u.created_months = std::clamp<std::int64_t>(std::llround(months(rng)), 0, 240);
  u.followers = lognormal_count(rng, 6.0, s[2]);
  u.friends = lognormal_count(rng, 5.5, s[3]);
  u.lists = lognormal_count(rng, 1.5, s[4]);
  u.favourites = lognormal_count(rng, 7.0, s[5]);
  u.statuses = lognormal_count(rng, 8.5, s[6]);
  return u;
}

}  // namespace

void RegimeConfig::validate() const {
  if (n_news < 8) throw Error(ErrorCode::InvalidConfig, "regime needs at least 8 news items");
  if (!(label_balance > 0.0 && label_balance < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "label_balance must be in (0,1)");
  }
  if (cascade_mean < 1.0 || cascade_dispersion < 0.0 || branching < 0.0 || time_scale_s <= 0.0 ||
      max_cascade_size == 0) {
    throw Error(ErrorCode::DegenerateRegime, "regime '" + name + "' has a zero or negative cascade size");
  }
  if (mention_prob < 0.0 || mention_prob > 1.0 || public_prob < 0.0 || public_prob > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "probabilities must lie in [0,1]");
  }
}

RawCorpus generate_corpus(const RegimeConfig& r) {
  r.validate();
  RawCorpus corpus;
  corpus.timelines.emplace();

  const auto n_fake = static_cast<std::size_t>(std::llround(r.label_balance * static_cast<double>(r.n_news)));
  std::vector<Label> labels(r.n_news, Label::Real);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_fake), Label::Fake);
  std::mt19937_64 label_rng(mix_seed(r.seed, 0xA5A5));
  std::shuffle(labels.begin(), labels.end(), label_rng);

  for (std::size_t i = 0; i < r.n_news; ++i) {
    std::mt19937_64 rng(mix_seed(r.seed, i + 1));
    const Id news = r.name + padded("-n", i, 4);
    corpus.labels[news] = labels[i];

    const double sign = labels[i] == Label::Fake ? 0.5 : -0.5;
    std::array<double, 8> shift{};
    for (std::size_t f = 0; f < shift.size(); ++f) shift[f] = sign * r.fake_shift[f];
    const double gap_mean = r.time_scale_s * std::exp(shift[7]);
    std::exponential_distribution<double> gap(1.0 / gap_mean);
    std::poisson_distribution<int> offspring(r.branching);
    std::bernoulli_distribution mention(r.mention_prob);
    std::bernoulli_distribution is_public(r.public_prob);

    std::vector<Id> news_users;
    std::size_t serial = 0;
    auto new_tweet = [&](double t, const std::optional<Id>& root) {
      TweetRecord tw;
      tw.tweet_id = news + padded("-t", serial, 5);
      tw.news_id = news;
      tw.user_id = news + padded("-u", serial, 5);
      tw.timestamp_s = kEpochBase + static_cast<std::int64_t>(i) * 86400 + std::llround(t);
      tw.root_tweet_id = root;
      tw.is_public = is_public(rng);
      ++serial;
      corpus.users.emplace(tw.user_id, make_user(rng, tw.user_id, shift));
      news_users.push_back(tw.user_id);
      return tw;
    };

    const std::size_t first = corpus.tweets.size();
    const std::size_t k = cascade_count(rng, r);
    double root_time = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (c > 0) root_time += gap(rng);
      std::vector<TweetRecord> cascade{new_tweet(root_time, std::nullopt)};
      const Id root_id = cascade.front().tweet_id;
      std::deque<std::size_t> frontier{0};
      while (!frontier.empty() && cascade.size() < r.max_cascade_size) {
        const std::size_t parent = frontier.front();
        frontier.pop_front();
        const int children = offspring(rng);
        for (int ch = 0; ch < children && cascade.size() < r.max_cascade_size; ++ch) {
          const double t = static_cast<double>(cascade[parent].timestamp_s - kEpochBase -
                                               static_cast<std::int64_t>(i) * 86400) + gap(rng);
          TweetRecord child = new_tweet(t, root_id);
          if (mention(rng)) cascade[parent].mentioned_user_ids.insert(child.user_id);
          frontier.push_back(cascade.size());
          cascade.push_back(std::move(child));
        }
      }
      corpus.tweets.insert(corpus.tweets.end(), cascade.begin(), cascade.end());
    }

    if (r.timelines) {
      std::uniform_int_distribution<std::size_t> count(20, kMaxTimelineTweets);
      std::uniform_int_distribution<std::size_t> who(0, news_users.size() - 1);
      std::poisson_distribution<int> mention_tweets(1.0 + 4.0 * r.mention_prob);
      for (const auto& u : news_users) {
        Timeline tl;
        tl.tweet_count = count(rng);
        const int m = news_users.size() > 1 ? mention_tweets(rng) : 0;
        for (int q = 0; q < m; ++q) tl.mentions.push_back({news_users[who(rng)]});
        (*corpus.timelines)[u] = std::move(tl);
      }
    }
    std::sort(corpus.tweets.begin() + static_cast<std::ptrdiff_t>(first), corpus.tweets.end(), tweet_before);
  }
  if (!r.timelines) corpus.timelines.reset();
  return corpus;
}

SynthDataset generate(const RegimeConfig& regime, const BuildOptions& options) {
  SynthDataset out;
  out.corpus = generate_corpus(regime);
  BuildResult built = build_dataset(out.corpus, options);
  out.dataset = std::move(built.dataset);
  out.manifest.regime = regime;
  out.manifest.realized = summarize(out.dataset);
  out.manifest.build = std::move(built.stats);
  return out;
}

std::pair<RegimeConfig, RegimeConfig> default_regimes() {
  // fakes: less verified, newer accounts, fewer followers, more statuses, burstier
  const std::array<double, 8> shift{-1.0, -0.8, -1.0, 0.0, 0.0, 0.0, 0.8, -0.5};

  RegimeConfig a;
  a.name = "A";
  a.n_news = 400;
  a.cascade_mean = 3.0;
  a.branching = 1.5;
  a.max_cascade_size = 30;
  a.time_scale_s = 600.0;
  a.fake_shift = shift;
  a.seed = 101;

  RegimeConfig b = a;
  b.name = "B";
  b.cascade_mean = 12.0;
  b.branching = 0.3;
  b.time_scale_s = 1800.0;
  // reverses A's cues on verified/followers/statuses/timing, adds friends and lists
  b.fake_shift = {1.0, 0.0, 1.0, -1.0, 0.8, 0.0, -0.8, 0.5};
  b.seed = 202;
  return {a, b};
}

nlohmann::json to_json(const RegimeConfig& r) {
  return nlohmann::json{{"name", r.name},
                        {"n_news", r.n_news},
                        {"cascade_mean", r.cascade_mean},
                        {"cascade_dispersion", r.cascade_dispersion},
                        {"branching", r.branching},
                        {"max_cascade_size", r.max_cascade_size},
                        {"time_scale_s", r.time_scale_s},
                        {"fake_shift", r.fake_shift},
                        {"mention_prob", r.mention_prob},
                        {"public_prob", r.public_prob},
                        {"label_balance", r.label_balance},
                        {"timelines", r.timelines},
                        {"seed", r.seed}};
}

nlohmann::json to_json(const GeneratorManifest& m) {
  return nlohmann::json{{"regime", to_json(m.regime)},
                        {"realized",
                         {{"mean_nodes", m.realized.mean_nodes},
                          {"mean_edges", m.realized.mean_edges},
                          {"max_nodes", m.realized.max_nodes},
                          {"real", m.realized.real},
                          {"fake", m.realized.fake}}}};
}

}  // namespace cascadecl
