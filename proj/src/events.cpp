#include "drowsy/events.hpp"

#include "drowsy/error.hpp"
#include "drowsy/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <iterator>
#include <limits>
#include <ostream>
#include <set>
#include <utility>

namespace drowsy {

const char* to_string(EventKind k)
{
    switch (k)
    {
    case EventKind::blink: return "blink";
    case EventKind::prolonged_closure: return "prolonged_closure";
    case EventKind::yawn: return "yawn";
    case EventKind::nod: return "nod";
    }
    return "unknown";
}

void EventConfig::validate() const
{
    if (blink_max_ms <= 0 || closure_min_ms <= 0 || yawn_min_ms <= 0 || nod_fall_max_ms <= 0 ||
        nod_recover_max_ms <= 0 || baseline_window_ms <= 0 || !(nod_delta_deg > 0.0))
        throw ConfigError("event thresholds must be positive");
    if (debounce_ms < 0)
        throw ConfigError("debounce_ms must be non-negative");
    if (blink_max_ms >= closure_min_ms)
        throw ConfigError(fmt::format("blink_max_ms ({}) must be below closure_min_ms ({})", blink_max_ms,
                                      closure_min_ms));
}

std::vector<std::int64_t> frame_end_times(const std::vector<FrameRecord>& records)
{
    std::vector<std::int64_t> ends(records.size());
    for (std::size_t i = 0; i + 1 < records.size(); ++i)
        ends[i] = records[i + 1].timestamp_ms;
    if (!records.empty())
    {
        const std::size_t n = records.size();
        const std::int64_t last_dt = n >= 2 ? records[n - 1].timestamp_ms - records[n - 2].timestamp_ms : 1;
        ends[n - 1] = records[n - 1].timestamp_ms + std::max<std::int64_t>(last_dt, 1);
    }
    return ends;
}

namespace {

State channel_state(const FrameRecord& r, Channel c) { return c == Channel::eye ? r.eye_state : r.mouth_state; }

} // namespace

std::vector<Episode> segment_episodes(const std::vector<FrameRecord>& records, Channel channel,
                                      std::int64_t debounce_ms)
{
    const auto ends = frame_end_times(records);

    struct Run
    {
        State state;
        std::size_t first; // record index of the first known frame
        std::size_t last_known;
    };
    std::vector<Run> raw;
    for (std::size_t i = 0; i < records.size(); ++i)
    {
        const State s = channel_state(records[i], channel);
        if (s == State::unknown)
            continue;
        if (raw.empty() || raw.back().state != s)
            raw.push_back({s, i, i});
        else
            raw.back().last_known = i;
    }
    if (raw.empty())
        return {};

    std::vector<Episode> eps(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k)
    {
        Episode& e = eps[k];
        e.channel = channel;
        e.state = raw[k].state;
        e.start_ms = records[raw[k].first].timestamp_ms;
        e.first_frame = records[raw[k].first].frame_index;
        if (k + 1 < raw.size())
        {
            // unknown frames before the next run belong to this one
            e.end_ms = records[raw[k + 1].first].timestamp_ms;
            e.last_frame = records[raw[k + 1].first - 1].frame_index;
        }
        else
        {
            e.end_ms = ends[raw[k].last_known];
            e.last_frame = records[raw[k].last_known].frame_index;
        }
    }

    // Debounce: merge the shortest too-short run into its neighbours until none is left.
    const std::size_t n = eps.size();
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> prev(n), next(n);
    std::vector<bool> alive(n, true);
    std::set<std::pair<std::int64_t, std::size_t>> short_runs;
    for (std::size_t k = 0; k < n; ++k)
    {
        prev[k] = k == 0 ? none : k - 1;
        next[k] = k + 1 == n ? none : k + 1;
        if (eps[k].duration_ms() < debounce_ms)
            short_runs.insert({eps[k].duration_ms(), k});
    }
    std::size_t live = n;
    auto absorb_right = [&](std::size_t into, std::size_t from) { // from follows into
        short_runs.erase({eps[into].duration_ms(), into});
        short_runs.erase({eps[from].duration_ms(), from});
        eps[into].end_ms = eps[from].end_ms;
        eps[into].last_frame = eps[from].last_frame;
        next[into] = next[from];
        if (next[from] != none)
            prev[next[from]] = into;
        alive[from] = false;
        --live;
        if (eps[into].duration_ms() < debounce_ms)
            short_runs.insert({eps[into].duration_ms(), into});
    };

    while (live > 1 && !short_runs.empty())
    {
        const std::size_t k = short_runs.begin()->second;
        const std::size_t p = prev[k];
        const std::size_t q = next[k];
        if (p != none)
        {
            absorb_right(p, k);
            if (q != none)
                absorb_right(p, q);
        }
        else
        {
            // leading run: the next run takes over its start
            short_runs.erase({eps[k].duration_ms(), k});
            short_runs.erase({eps[q].duration_ms(), q});
            eps[q].start_ms = eps[k].start_ms;
            eps[q].first_frame = eps[k].first_frame;
            prev[q] = none;
            alive[k] = false;
            --live;
            if (eps[q].duration_ms() < debounce_ms)
                short_runs.insert({eps[q].duration_ms(), q});
        }
    }

    std::vector<Episode> out;
    out.reserve(live);
    for (std::size_t k = 0; k < n; ++k)
        if (alive[k])
            out.push_back(eps[k]);
    return out;
}

namespace {

// Median of a sliding multiset: lo holds the smaller half (one extra when odd).
class RollingMedian
{
public:
    void insert(double v)
    {
        if (lo_.empty() || v <= *lo_.rbegin())
            lo_.insert(v);
        else
            hi_.insert(v);
        rebalance();
    }

    void erase(double v)
    {
        if (!lo_.empty() && v <= *lo_.rbegin())
            lo_.erase(lo_.find(v));
        else
            hi_.erase(hi_.find(v));
        rebalance();
    }

    double median() const
    {
        if (lo_.size() > hi_.size())
            return *lo_.rbegin();
        return 0.5 * (*lo_.rbegin() + *hi_.begin());
    }

private:
    void rebalance()
    {
        while (lo_.size() > hi_.size() + 1)
        {
            auto it = std::prev(lo_.end());
            hi_.insert(*it);
            lo_.erase(it);
        }
        while (hi_.size() > lo_.size())
        {
            lo_.insert(*hi_.begin());
            hi_.erase(hi_.begin());
        }
    }

    std::multiset<double> lo_;
    std::multiset<double> hi_;
};

} // namespace

std::vector<DrowsinessEvent> detect_nods(const std::vector<FrameRecord>& records, const EventConfig& cfg)
{
    std::vector<DrowsinessEvent> nods;
    RollingMedian median;
    std::deque<std::pair<std::int64_t, double>> window;

    enum class Phase { idle, dipping, discard } phase = Phase::idle;
    bool have_near = false;
    std::int64_t near_t = 0;
    double near_baseline = 0.0;
    std::int64_t dip_start = 0;
    double dip_baseline = 0.0;
    double dip_min = 0.0;
    std::int64_t dip_min_t = 0;
    const double half = cfg.nod_delta_deg / 2.0;

    for (const auto& r : records)
    {
        if (!r.pose)
            continue;
        const std::int64_t t = r.timestamp_ms;
        const double p = r.pose->pitch_deg;

        window.emplace_back(t, p);
        median.insert(p);
        while (window.front().first < t - cfg.baseline_window_ms)
        {
            median.erase(window.front().second);
            window.pop_front();
        }
        const double baseline = median.median();
        const bool near = p >= baseline - half;

        switch (phase)
        {
        case Phase::idle:
            if (have_near && p <= near_baseline - cfg.nod_delta_deg)
            {
                if (t - near_t <= cfg.nod_fall_max_ms)
                {
                    phase = Phase::dipping;
                    dip_start = near_t;
                    dip_baseline = near_baseline;
                    dip_min = p;
                    dip_min_t = t;
                }
                else
                {
                    phase = Phase::discard; // slow drop: posture change, not a nod
                }
            }
            else if (near)
            {
                have_near = true;
                near_t = t;
                near_baseline = baseline;
            }
            break;

        case Phase::dipping:
            if (p < dip_min)
            {
                dip_min = p;
                dip_min_t = t;
            }
            if (p >= dip_baseline - half)
            {
                if (t - dip_min_t <= cfg.nod_recover_max_ms)
                    nods.push_back({EventKind::nod, dip_start, t, dip_baseline - dip_min});
                phase = Phase::idle;
                have_near = true;
                near_t = t;
                near_baseline = baseline;
            }
            else if (t - dip_min_t > cfg.nod_recover_max_ms)
            {
                phase = Phase::discard;
            }
            break;

        case Phase::discard:
            if (near)
            {
                phase = Phase::idle;
                have_near = true;
                near_t = t;
                near_baseline = baseline;
            }
            break;
        }
    }
    return nods;
}

std::vector<DrowsinessEvent> detect_events(const std::vector<Episode>& eye_episodes,
                                           const std::vector<Episode>& mouth_episodes,
                                           const std::vector<FrameRecord>& records, const EventConfig& cfg)
{
    cfg.validate();
    std::vector<DrowsinessEvent> events;
    for (const auto& e : eye_episodes)
    {
        if (e.state != State::closed)
            continue;
        const auto d = e.duration_ms();
        if (d <= cfg.blink_max_ms)
            events.push_back({EventKind::blink, e.start_ms, e.end_ms, static_cast<double>(d)});
        else if (d >= cfg.closure_min_ms)
            events.push_back({EventKind::prolonged_closure, e.start_ms, e.end_ms, static_cast<double>(d)});
    }
    for (const auto& e : mouth_episodes)
        if (e.state == State::open && e.duration_ms() >= cfg.yawn_min_ms)
            events.push_back({EventKind::yawn, e.start_ms, e.end_ms, static_cast<double>(e.duration_ms())});

    auto nods = detect_nods(records, cfg);
    events.insert(events.end(), nods.begin(), nods.end());
    std::stable_sort(events.begin(), events.end(),
                     [](const DrowsinessEvent& a, const DrowsinessEvent& b) { return a.start_ms < b.start_ms; });
    return events;
}

std::vector<WindowStats> window_stats(const std::vector<FrameRecord>& records,
                                      const std::vector<DrowsinessEvent>& events, std::int64_t window_ms,
                                      std::int64_t stride_ms)
{
    if (records.empty())
        throw EmptyStream("no records to summarise");
    if (stride_ms <= 0 || window_ms < stride_ms)
        throw ConfigError("window_ms must be >= stride_ms > 0");

    const auto ends = frame_end_times(records);
    const std::int64_t t0 = records.front().timestamp_ms;
    const std::int64_t stream_end = ends.back();

    std::vector<WindowStats> out;
    std::size_t first = 0; // first record with timestamp >= window start
    for (std::int64_t s = t0; s < stream_end; s += stride_ms)
    {
        const std::int64_t e = s + window_ms;
        while (first < records.size() && records[first].timestamp_ms < s)
            ++first;

        WindowStats w;
        w.window_start_ms = s;
        w.window_end_ms = e;
        std::int64_t frames = 0, held = 0, valid = 0, known_ms = 0, closed_ms = 0, posed = 0;
        double pitch_sum = 0.0;
        for (std::size_t i = first; i < records.size() && records[i].timestamp_ms < e; ++i)
        {
            const FrameRecord& r = records[i];
            ++frames;
            held += r.held ? 1 : 0;
            if (r.eye_state != State::unknown)
            {
                ++valid;
                const std::int64_t d = ends[i] - r.timestamp_ms;
                known_ms += d;
                if (r.eye_state == State::closed)
                    closed_ms += d;
            }
            if (r.pose)
            {
                ++posed;
                pitch_sum += r.pose->pitch_deg;
            }
        }
        for (const auto& ev : events)
        {
            if (ev.start_ms < s || ev.start_ms >= e)
                continue;
            w.blink_count += ev.kind == EventKind::blink ? 1 : 0;
            w.yawn_count += ev.kind == EventKind::yawn ? 1 : 0;
            w.nod_count += ev.kind == EventKind::nod ? 1 : 0;
        }
        if (known_ms > 0)
            w.closed_fraction = static_cast<double>(closed_ms) / static_cast<double>(known_ms);
        if (frames > 0)
        {
            w.held_fraction = static_cast<double>(held) / static_cast<double>(frames);
            w.valid_fraction = static_cast<double>(valid) / static_cast<double>(frames);
        }
        if (posed > 0)
            w.mean_pitch_deg = pitch_sum / static_cast<double>(posed);
        out.push_back(w);
    }
    return out;
}

void write_events(const std::vector<DrowsinessEvent>& events, std::ostream& out)
{
    for (const auto& e : events)
        out << fmt::format(R"({{"kind":"{}","start_ms":{},"end_ms":{},"magnitude":{}}})", to_string(e.kind),
                           e.start_ms, e.end_ms, format_fixed6(e.magnitude))
            << '\n';
    if (!out)
        throw SinkError("failed to write events");
}

void write_stats(const std::vector<WindowStats>& stats, std::ostream& out)
{
    out << kStatsCsvHeader << '\n';
    for (const auto& w : stats)
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", w.window_start_ms, w.window_end_ms, w.blink_count,
                           w.yawn_count, w.nod_count, w.closed_fraction ? format_fixed6(*w.closed_fraction) : "",
                           format_fixed6(w.held_fraction), format_fixed6(w.valid_fraction),
                           w.mean_pitch_deg ? format_fixed6(*w.mean_pitch_deg) : "");
    if (!out)
        throw SinkError("failed to write stats");
}

} // namespace drowsy
