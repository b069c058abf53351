#include "flowmig/checkers/checkers.hpp"

#include <algorithm>
#include <bit>

namespace flowmig::checkers
{
    namespace
    {
        // Followers beyond the flow itself: one packet of each direction that a
        // mapping created inside the flow would have to serve.
        std::vector<Packet> probes(const nf::NfConfig &cfg, const std::vector<Packet> &flow)
        {
            FlowKey fwd{0x0A000001, 0xC6336402, 5000, 80, 6};
            for (const Packet &p : flow)
            {
                if (p.direction == Direction::Forward)
                {
                    fwd = p.flow;
                    break;
                }
            }
            Timestamp ts = 0;
            std::int64_t seg = 0;
            for (const Packet &p : flow)
            {
                ts = std::max(ts, p.admit_ts);
                seg = std::max(seg, p.tcp.segment);
            }
            Packet data;
            data.flow = fwd;
            data.kind = PacketKind::Data;
            data.payload_len = 1000;
            data.direction = Direction::Forward;
            data.seq_id = static_cast<std::int64_t>(flow.size()) + 1;
            data.tcp.segment = seg + 1;
            data.admit_ts = ts + 1;

            Packet ack;
            ack.flow = FlowKey{fwd.dst_addr, cfg.nat.public_addr, fwd.dst_port, cfg.nat.port_lo, fwd.protocol};
            ack.kind = PacketKind::Ack;
            ack.direction = Direction::Reverse;
            ack.seq_id = static_cast<std::int64_t>(flow.size()) + 2;
            ack.tcp.cum_ack = seg + 1;
            ack.admit_ts = ts + 2;
            return {data, ack};
        }

        nf::NFState patched(const nf::NFState &base, const nf::NFState &from, const std::vector<int> &idx)
        {
            nf::NFState q = base;
            for (int i : idx)
            {
                q.substates[static_cast<std::size_t>(i - 1)] = from.substates[static_cast<std::size_t>(i - 1)];
            }
            return q;
        }
    } // namespace

    std::vector<CspRange> detect_csp_oracle(const nf::NfConfig &cfg, const std::vector<Packet> &flow, std::size_t cap)
    {
        if (flow.size() > cap)
        {
            throw OracleSizeError("flow of " + std::to_string(flow.size()) + " packets exceeds the oracle cap of " +
                                  std::to_string(cap));
        }
        const nf::NfHandle f = nf::make_nf(cfg);
        const std::size_t n = flow.size();

        std::vector<nf::NFState> q{nf::initial_state(f->schema())};
        std::vector<nf::IndexSet> updated;
        for (const Packet &p : flow)
        {
            nf::StepResult r = f->step(q.back(), p);
            updated.push_back(r.updated_indices);
            q.push_back(std::move(r.next_state));
        }

        std::vector<Packet> followers = flow;
        const std::vector<Packet> extra = probes(cfg, flow);
        followers.insert(followers.end(), extra.begin(), extra.end());

        // out[k][j]: output of follower j processed from state q[k].
        std::vector<std::vector<OutputSeq>> out(n + 1);
        for (std::size_t k = 0; k <= n; ++k)
        {
            for (const Packet &p : followers)
            {
                out[k].push_back(f->step(q[k], p).output);
            }
        }
        auto follows = [&](std::size_t end) {
            std::vector<std::size_t> v;
            for (std::size_t j = end; j < followers.size(); ++j)
            {
                v.push_back(j);
            }
            return v;
        };

        std::vector<CspRange> found;
        for (std::size_t len = 1; len <= n; ++len)
        {
            for (std::size_t b = 0; b + len <= n; ++b)
            {
                const std::size_t e = b + len;
                const bool contains_found = std::any_of(found.begin(), found.end(), [&](const CspRange &r) {
                    return r.begin >= b && r.end <= e;
                });
                if (contains_found)
                {
                    continue;
                }
                const std::vector<std::size_t> ys = follows(e);
                const bool needs = std::any_of(ys.begin(), ys.end(),
                                               [&](std::size_t y) { return !nf::same_output(out[e][y], out[b][y]); });
                if (!needs)
                {
                    continue;
                }

                std::vector<int> touched;
                for (std::size_t k = b; k < e; ++k)
                {
                    touched.insert(touched.end(), updated[k].begin(), updated[k].end());
                }
                std::sort(touched.begin(), touched.end());
                touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

                // Smallest subset of the touched substates that, synchronized, makes
                // every follower behave as it would after the range.
                CspRange r{b, e, nf::IndexSet(touched.begin(), touched.end())};
                const std::size_t m = touched.size();
                std::size_t best = m + 1;
                for (std::uint32_t mask = 1; mask < (1u << m); ++mask)
                {
                    const auto bits = static_cast<std::size_t>(std::popcount(mask));
                    if (bits >= best)
                    {
                        continue;
                    }
                    std::vector<int> idx;
                    for (std::size_t i = 0; i < m; ++i)
                    {
                        if (mask & (1u << i))
                        {
                            idx.push_back(touched[i]);
                        }
                    }
                    const nf::NFState qp = patched(q[b], q[e], idx);
                    const bool ok = std::all_of(ys.begin(), ys.end(), [&](std::size_t y) {
                        return nf::same_output(f->step(qp, followers[y]).output, out[e][y]);
                    });
                    if (ok)
                    {
                        best = bits;
                        r.css = nf::IndexSet(idx.begin(), idx.end());
                    }
                }
                found.push_back(std::move(r));
            }
        }
        std::sort(found.begin(), found.end(), [](const CspRange &a, const CspRange &b) { return a.begin < b.begin; });
        return found;
    }

    std::vector<CspRange> declared_csp_ranges(const nf::NfConfig &cfg, const std::vector<Packet> &flow)
    {
        const nf::NfHandle f = nf::make_nf(cfg);
        const nf::NfSchema &schema = f->schema();
        std::vector<CspRange> ranges;
        nf::NFState q = nf::initial_state(schema);
        bool open = false;
        CspRange cur;
        for (std::size_t k = 0; k < flow.size(); ++k)
        {
            nf::StepResult r = f->step(q, flow[k]);
            if (r.csp_marker != CspMarker::NotInCSP)
            {
                if (!open)
                {
                    cur = CspRange{k, k + 1, {}};
                    open = true;
                }
                cur.end = k + 1;
                for (int i : r.updated_indices)
                {
                    if (schema.is_css(i))
                    {
                        cur.css.insert(i);
                    }
                }
                if (r.csp_marker == CspMarker::EndOfCSP)
                {
                    ranges.push_back(cur);
                    open = false;
                }
            }
            q = std::move(r.next_state);
        }
        if (open)
        {
            ranges.push_back(cur);
        }
        return ranges;
    }
} // namespace flowmig::checkers
