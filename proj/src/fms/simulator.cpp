#include "flowmig/fms/simulator.hpp"

#include "flowmig/nf/nf.hpp"
#include "flowmig/transport/tcp.hpp"

#include <array>
#include <deque>
#include <queue>
#include <random>

namespace flowmig::fms
{
    namespace
    {
        constexpr std::uint32_t kClientAddr = 0x0A000001; // 10.0.0.1
        constexpr std::uint16_t kClientPort = 5000;
        constexpr std::uint32_t kServerAddr = 0xC6336402; // 198.51.100.2
        constexpr std::uint16_t kServerPort = 80;

        enum class Act : std::uint8_t
        {
            LinkArrive,
            NfFinish,
            SenderWake,
            Rto,
            MigrationBegin,
            SmmPoll,
            MsgArrive,
            MsgAck,
        };

        struct Pending
        {
            Tick time;
            std::uint64_t seq;
            Act act;
            std::int64_t a;
            std::int64_t b;

            bool operator>(const Pending &o) const noexcept
            {
                return time != o.time ? time > o.time : seq > o.seq;
            }
        };

        struct Link
        {
            Node from;
            Node to;
            double bps;
            Tick delay;
            Tick busy_until = 0;
        };

        struct NfInstance
        {
            Node site;
            nf::NFState state;
            std::int64_t state_id = kNone;
            std::deque<std::int64_t> queue;
            bool busy = false;
            std::vector<std::int64_t> departing;
            std::mt19937_64 rng;
        };

        class Simulator
        {
        public:
            Simulator(const Scenario &sc, const FaultInjection &faults)
                : sc_(sc), faults_(faults), nf_(nf::make_nf(sc.nf)), workload_(make_workload(sc)),
                  sender_(transport::make_sender(sc.tcp, static_cast<std::int64_t>(workload_.payload.size()))),
                  msg_delay_(message_delay(sc)), t_r_(effective_t_r(sc))
            {
                validate(sc);
                trace_.scenario_id = sc.scenario_id;
                trace_.seed = sc.seed;
                trace_.strategy = std::string(to_string(sc.strategy));
                trace_.nf = sc.nf;
                trace_.schema = nf_->schema();

                link_index_.fill(-1);
                for (const LinkSpec &l : sc.links)
                {
                    link_index_[slot(l.from, l.to)] = static_cast<int>(links_.size());
                    links_.push_back(Link{l.from, l.to, l.bandwidth_bps, ticks_from_ms(l.delay_ms)});
                }

                const nf::NFState q0 = nf::initial_state(nf_->schema());
                for (NfInstance *inst : {&src_, &dst_})
                {
                    inst->site = inst == &src_ ? Node::NfSrc : Node::NfDst;
                    inst->state = q0;
                    inst->state_id = add_state(q0);
                    inst->rng.seed(sc.seed * 0x9E3779B97F4A7C15ull + (inst == &src_ ? 1 : 2));
                }
            }

            RunResult run()
            {
                schedule(0, Act::SenderWake);
                if (migrates(sc_.strategy))
                {
                    schedule(ticks_from_s(sc_.t1_s), Act::MigrationBegin);
                }
                while (!pending_.empty())
                {
                    const Pending p = pending_.top();
                    pending_.pop();
                    now_ = p.time;
                    if (now_ > sc_.time_limit)
                    {
                        throw SimulationError("time limit of " + std::to_string(seconds_from_ticks(sc_.time_limit)) +
                                              " s exceeded (transfer at segment " +
                                              std::to_string(sender_.snd_una) + " of " +
                                              std::to_string(sender_.last_segment) + ")");
                    }
                    dispatch(p);
                }
                stats_.completed = transport::sender_done(sender_);
                stats_.finish_time = now_;
                stats_.dup_acks = sender_.dup_acks;
                stats_.retransmits = sender_.retransmit_count;
                stats_.spurious_retransmits = sender_.spurious_retransmit_count;
                stats_.dsacks = sender_.dsacks_received;
                stats_.rto_count = sender_.rto_count;
                stats_.max_reorder_extent = sender_.max_reorder_extent;
                stats_.final_dupthresh = sender_.dupthresh;
                return RunResult{std::move(trace_), stats_};
            }

        private:
            static std::size_t slot(Node a, Node b) { return static_cast<std::size_t>(a) * 8 + static_cast<std::size_t>(b); }

            void schedule(Tick at, Act act, std::int64_t a = 0, std::int64_t b = 0)
            {
                pending_.push(Pending{at, next_seq_++, act, a, b});
            }

            Event &log(EventKind kind, Node site, std::int64_t packet = kNone)
            {
                Event e;
                e.time = now_;
                e.kind = kind;
                e.site = site;
                e.packet = packet;
                e.output_begin = static_cast<std::int64_t>(trace_.output_ids.size());
                trace_.events.push_back(e);
                return trace_.events.back();
            }

            std::int64_t add_packet(Packet p)
            {
                p.id = static_cast<std::int64_t>(trace_.packets.size());
                trace_.packets.push_back(p);
                nf_origin_.push_back(0);
                return p.id;
            }

            std::int64_t add_state(nf::NFState q)
            {
                q.applied.clear();
                trace_.states.push_back(std::move(q));
                return static_cast<std::int64_t>(trace_.states.size()) - 1;
            }

            std::int64_t add_message(nf::StateUpdateMessage m)
            {
                m.id = static_cast<std::int64_t>(trace_.messages.size());
                trace_.messages.push_back(std::move(m));
                return static_cast<std::int64_t>(trace_.messages.size()) - 1;
            }

            void transmit(Node from, Node to, std::int64_t pkt)
            {
                const int idx = link_index_[slot(from, to)];
                if (idx < 0)
                {
                    throw SimulationError("no link " + std::string(to_string(from)) + "->" + std::string(to_string(to)));
                }
                Link &l = links_[static_cast<std::size_t>(idx)];
                const Tick start = std::max(now_, l.busy_until);
                l.busy_until = start + serialization_ticks(trace_.packet(pkt).payload_len, l.bps);
                schedule(l.busy_until + l.delay, Act::LinkArrive, idx, pkt);
            }

            void dispatch(const Pending &p)
            {
                switch (p.act)
                {
                case Act::LinkArrive:
                    on_arrive(links_[static_cast<std::size_t>(p.a)], p.b);
                    break;
                case Act::NfFinish:
                    on_nf_finish(p.a == 0 ? src_ : dst_);
                    break;
                case Act::SenderWake:
                    wake_scheduled_ = false;
                    try_send();
                    break;
                case Act::Rto:
                    on_rto(p.a);
                    break;
                case Act::MigrationBegin:
                    on_migration_begin();
                    break;
                case Act::SmmPoll:
                    on_poll();
                    break;
                case Act::MsgArrive:
                    on_msg_arrive(p.a);
                    break;
                case Act::MsgAck:
                    on_msg_ack(p.a);
                    break;
                }
            }

            void on_arrive(const Link &l, std::int64_t pkt)
            {
                switch (l.to)
                {
                case Node::S1:
                    if (l.from == Node::H1)
                        admit(pkt, Node::S1);
                    else
                        exit_fms(pkt, Node::S1, Node::H1);
                    break;
                case Node::S2:
                    if (l.from == Node::H2)
                        admit(pkt, Node::S2);
                    else
                        exit_fms(pkt, Node::S2, Node::H2);
                    break;
                case Node::NfSrc:
                    nf_arrive(src_, pkt);
                    break;
                case Node::NfDst:
                    nf_arrive(dst_, pkt);
                    break;
                case Node::H2:
                    receiver_arrive(pkt);
                    break;
                case Node::H1:
                    sender_arrive(pkt);
                    break;
                default:
                    throw SimulationError("packet delivered to " + std::string(to_string(l.to)));
                }
            }

            // ---- Action Manager ----

            void admit(std::int64_t pkt, Node site)
            {
                trace_.packets[static_cast<std::size_t>(pkt)].admit_ts = ++admit_counter_;
                log(EventKind::Admit, site, pkt);

                if (!migrating_ || rerouted_)
                {
                    route(pkt, site, rerouted_ ? Route::Dst : Route::Src);
                    return;
                }
                switch (sc_.strategy)
                {
                case Strategy::BufferAll:
                    if (static_cast<std::int64_t>(buffer_.size()) >= sc_.buffer_cap)
                    {
                        throw BufferOverflow("AM buffer exceeded " + std::to_string(sc_.buffer_cap) +
                                             " packets at t=" + std::to_string(now_));
                    }
                    log(EventKind::Buffer, site, pkt);
                    buffer_.emplace_back(pkt, site);
                    ++stats_.buffered;
                    stats_.max_buffer = std::max<std::int64_t>(stats_.max_buffer, static_cast<std::int64_t>(buffer_.size()));
                    break;
                case Strategy::FreezeDrop:
                    log(EventKind::Drop, site, pkt);
                    ++stats_.dropped;
                    break;
                default:
                    route(pkt, site, Route::Src);
                    break;
                }
            }

            void route(std::int64_t pkt, Node site, Route r)
            {
                log(EventKind::RouteDecision, site, pkt).route = r;
                if (r == Route::Src)
                {
                    ++src_unprocessed_;
                }
                transmit(site, r == Route::Src ? Node::NfSrc : Node::NfDst, pkt);
            }

            void exit_fms(std::int64_t pkt, Node site, Node host)
            {
                log(EventKind::ExitFMS, site, pkt);
                if (nf_origin_[static_cast<std::size_t>(pkt)] == 1)
                {
                    --src_pending_exits_;
                }
                transmit(site, host, pkt);
            }

            // ---- NF instances ----

            void nf_arrive(NfInstance &inst, std::int64_t pkt)
            {
                inst.queue.push_back(pkt);
                if (!inst.busy)
                {
                    start_service(inst);
                }
            }

            void start_service(NfInstance &inst)
            {
                const std::int64_t pkt = inst.queue.front();
                inst.queue.pop_front();
                const bool at_src = inst.site == Node::NfSrc;

                nf::StepResult r = nf_->step(inst.state, trace_.packet(pkt));
                const std::int64_t before = inst.state_id;
                if (!r.updated_indices.empty())
                {
                    inst.state = r.next_state;
                    inst.state_id = add_state(r.next_state);
                }
                else
                {
                    inst.state = std::move(r.next_state);
                }

                std::vector<std::int64_t> outs;
                for (Packet &o : r.output.items)
                {
                    const std::int64_t id = add_packet(o);
                    nf_origin_[static_cast<std::size_t>(id)] = at_src ? 1 : 2;
                    outs.push_back(id);
                }
                Event &e = log(EventKind::NFProcess, inst.site, pkt);
                e.state_before = before;
                e.state_after = inst.state_id;
                e.marker = r.csp_marker;
                e.output_count = static_cast<std::int32_t>(outs.size());
                trace_.output_ids.insert(trace_.output_ids.end(), outs.begin(), outs.end());

                if (at_src)
                {
                    --src_unprocessed_;
                    src_pending_exits_ += static_cast<std::int64_t>(outs.size());
                    on_source_step(r);
                }
                else if (released_unprocessed_ > 0 && is_released_[static_cast<std::size_t>(pkt)])
                {
                    if (--released_unprocessed_ == 0)
                    {
                        end_migration();
                    }
                }

                inst.departing = std::move(outs);
                inst.busy = true;
                const Tick span = sc_.service_max - sc_.service_min + 1;
                const Tick service = sc_.service_min + static_cast<Tick>(inst.rng() % static_cast<std::uint64_t>(span));
                schedule(now_ + service, Act::NfFinish, at_src ? 0 : 1);
            }

            void on_nf_finish(NfInstance &inst)
            {
                for (std::int64_t out : inst.departing)
                {
                    const bool fwd = trace_.packet(out).direction == Direction::Forward;
                    transmit(inst.site, fwd ? Node::S2 : Node::S1, out);
                }
                inst.departing.clear();
                inst.busy = false;
                if (!inst.queue.empty())
                {
                    start_service(inst);
                }
            }

            // ---- State Migration Manager ----

            bool weak_o_family() const
            {
                return sc_.strategy == Strategy::WeakO || sc_.strategy == Strategy::AdversarialSkipQueue ||
                       sc_.strategy == Strategy::AdversarialMidCsp;
            }

            void on_source_step(const nf::StepResult &r)
            {
                last_src_marker_ = r.csp_marker;
                if (rerouted_)
                {
                    ++stats_.post_flip_source_steps;
                }
                if (ended_)
                {
                    ++stats_.late_source_steps;
                    return;
                }
                if (!migrating_ || !weak_o_family())
                {
                    return;
                }
                for (const nf::StateUpdateMessage &m : r.messages)
                {
                    if (m.cls == nf::MessageClass::CSS && rerouted_ && sc_.strategy == Strategy::WeakO)
                    {
                        throw ProtocolViolation("CSS delta produced at the source after re-route (t=" +
                                                std::to_string(now_) + ")");
                    }
                    enqueue(m);
                }
            }

            void enqueue(const nf::StateUpdateMessage &m)
            {
                auto &q = unsent_[static_cast<std::size_t>(m.cls)];
                q.insert(q.end(), m.deltas.begin(), m.deltas.end());
            }

            void on_migration_begin()
            {
                migrating_ = true;
                stats_.migration_start = now_;
                log(EventKind::MigrationStart, Node::Smm);
                if (weak_o_family())
                {
                    for (const nf::StateUpdateMessage &m : nf_->split_state(src_.state))
                    {
                        enqueue(m);
                    }
                    on_poll();
                }
                else
                {
                    on_poll();
                }
            }

            void send_message(nf::StateUpdateMessage m)
            {
                const nf::MessageClass cls = m.cls;
                const std::int64_t id = add_message(std::move(m));
                log(EventKind::MsgSend, Node::NfSrc).message = id;
                ++inflight_[static_cast<std::size_t>(cls)];
                schedule(now_ + msg_delay_, Act::MsgArrive, id);
            }

            bool css_queue_empty() const
            {
                const auto css = static_cast<std::size_t>(nf::MessageClass::CSS);
                return unsent_[css].empty() && inflight_[css] == 0;
            }

            bool other_queue_empty() const
            {
                for (nf::MessageClass c : {nf::MessageClass::RCSS, nf::MessageClass::NSS})
                {
                    const auto i = static_cast<std::size_t>(c);
                    if (!unsent_[i].empty() || inflight_[i] != 0)
                    {
                        return false;
                    }
                }
                return true;
            }

            bool source_css_set() const
            {
                for (int i : nf_->schema().css_indices)
                {
                    if (src_.state.at(i) != nf::initial_state(nf_->schema()).at(i))
                    {
                        return true;
                    }
                }
                return false;
            }

            bool may_flip() const
            {
                switch (sc_.strategy)
                {
                case Strategy::AdversarialSkipQueue:
                    return true;
                case Strategy::AdversarialMidCsp:
                    // Once the CSP is over there is nothing left to split.
                    return source_css_set() || src_unprocessed_ > 0;
                default:
                    break;
                }
                if (!css_queue_empty() || last_src_marker_ == CspMarker::InCSP)
                {
                    return false;
                }
                // A packet still on its way to the source may open a CSP.
                const bool opener_pending =
                    !nf_->schema().css_indices.empty() && !source_css_set() && src_unprocessed_ > 0;
                return !opener_pending;
            }

            void on_poll()
            {
                if (ended_)
                {
                    return;
                }
                if (weak_o_family())
                {
                    for (nf::MessageClass c : {nf::MessageClass::CSS, nf::MessageClass::RCSS, nf::MessageClass::NSS})
                    {
                        auto &q = unsent_[static_cast<std::size_t>(c)];
                        if (!q.empty())
                        {
                            send_message(nf::StateUpdateMessage{kNone, Node::NfSrc, Node::NfDst, c, std::move(q)});
                            q.clear();
                        }
                    }
                    if (!timer_started_ && may_flip())
                    {
                        reroute();
                        timer_started_ = true;
                        timer_deadline_ = now_ + t_r_;
                    }
                    if (timer_started_ && now_ >= timer_deadline_ && css_queue_empty() && other_queue_empty())
                    {
                        end_migration();
                        return;
                    }
                }
                else
                {
                    // Copy only once the source has nothing left to process or emit.
                    if (src_unprocessed_ == 0 && src_pending_exits_ == 0)
                    {
                        send_message(nf_->snapshot(src_.state));
                        return;
                    }
                }
                schedule(now_ + sc_.poll_interval, Act::SmmPoll);
            }

            void reroute()
            {
                rerouted_ = true;
                stats_.reroute_at = now_;
                stats_.in_flight_at_reroute = src_unprocessed_;
                log(EventKind::Reroute, Node::Controller).aux = src_unprocessed_;
            }

            void end_migration()
            {
                if (ended_)
                {
                    return;
                }
                ended_ = true;
                stats_.migration_end = now_;
                log(EventKind::MigrationEnd, Node::Smm);
            }

            void on_msg_arrive(std::int64_t id)
            {
                const nf::StateUpdateMessage &m = trace_.message(id);
                const bool other = m.cls == nf::MessageClass::RCSS || m.cls == nf::MessageClass::NSS;
                const bool suppressed = other && other_messages_seen_++ == faults_.suppress_other_message;
                if (!suppressed)
                {
                    const std::int64_t before = dst_.state_id;
                    nf::NFState next = nf_->apply(dst_.state, m);
                    if (!nf::same_substates(next, dst_.state))
                    {
                        dst_.state_id = add_state(next);
                    }
                    dst_.state = std::move(next);
                    Event &e = log(EventKind::MsgApply, Node::NfDst);
                    e.message = id;
                    e.state_before = before;
                    e.state_after = dst_.state_id;
                }
                schedule(now_ + msg_delay_, Act::MsgAck, id);
            }

            void on_msg_ack(std::int64_t id)
            {
                const nf::MessageClass cls = trace_.message(id).cls;
                --inflight_[static_cast<std::size_t>(cls)];
                if (cls != nf::MessageClass::Full)
                {
                    return;
                }
                reroute();
                if (sc_.strategy == Strategy::BufferAll)
                {
                    is_released_.resize(trace_.packets.size() + 1, false);
                    for (const auto &[pkt, site] : buffer_)
                    {
                        is_released_[static_cast<std::size_t>(pkt)] = true;
                        ++released_unprocessed_;
                        route(pkt, site, Route::Dst);
                    }
                    const bool nothing = buffer_.empty();
                    buffer_.clear();
                    if (nothing)
                    {
                        end_migration();
                    }
                }
                else
                {
                    end_migration();
                }
            }

            // ---- Hosts ----

            std::int64_t released_segments()
            {
                while (released_ < workload_.available_at.size() && workload_.available_at[released_] <= now_)
                {
                    ++released_;
                }
                return static_cast<std::int64_t>(released_);
            }

            void try_send()
            {
                const std::int64_t available = released_segments();
                while (auto seg = transport::sender_next_segment(sender_, available))
                {
                    Packet p;
                    p.flow = FlowKey{kClientAddr, kServerAddr, kClientPort, kServerPort, 6};
                    p.seq_id = ++fwd_seq_;
                    p.direction = Direction::Forward;
                    p.tcp.segment = *seg;
                    if (*seg == 0)
                    {
                        p.kind = PacketKind::Syn;
                    }
                    else if (*seg == sender_.last_segment)
                    {
                        p.kind = PacketKind::Fin;
                    }
                    else
                    {
                        p.kind = PacketKind::Data;
                        p.payload_len = workload_.payload[static_cast<std::size_t>(*seg - 1)];
                    }
                    p.tcp.retransmission = sender_.flags[static_cast<std::size_t>(*seg)] & transport::kSent;
                    const std::int64_t id = add_packet(p);
                    log(EventKind::HostSend, Node::H1, id);
                    transport::sender_on_send(sender_, *seg, now_);
                    transmit(Node::H1, Node::S1, id);
                }
                if (!wake_scheduled_ && released_ < workload_.available_at.size() && sender_.snd_una > 0)
                {
                    wake_scheduled_ = true;
                    schedule(std::max(now_ + 1, workload_.available_at[released_]), Act::SenderWake);
                }
                if (!rto_armed_ && transport::sender_has_outstanding(sender_))
                {
                    arm_rto();
                }
            }

            void arm_rto()
            {
                rto_armed_ = true;
                const Tick rto = transport::sender_rto(sender_) << std::min<std::int64_t>(rto_backoff_, 6);
                schedule(now_ + rto, Act::Rto, ++rto_generation_);
            }

            void on_rto(std::int64_t generation)
            {
                if (generation != rto_generation_ || transport::sender_done(sender_))
                {
                    return;
                }
                rto_armed_ = false;
                if (!transport::sender_has_outstanding(sender_))
                {
                    return;
                }
                ++rto_backoff_;
                transport::sender_on_rto(sender_);
                try_send();
            }

            void sender_arrive(std::int64_t pkt)
            {
                const Packet &p = trace_.packet(pkt);
                log(EventKind::HostReceive, Node::H1, pkt);
                const transport::AckOutcome out = transport::sender_on_ack(sender_, p.tcp, now_);
                trace_.events.back().aux = out.spurious_detected;
                if (out.progressed)
                {
                    rto_backoff_ = 0;
                    rto_armed_ = false;
                    ++rto_generation_;
                }
                try_send();
            }

            void receiver_arrive(std::int64_t pkt)
            {
                const Packet in = trace_.packet(pkt);
                const transport::ReceiverOutput r = transport::receiver_on_data(receiver_, in.tcp.segment);
                std::int64_t bytes = 0;
                for (std::int64_t seg : r.delivered)
                {
                    if (seg >= 1 && seg < sender_.last_segment)
                    {
                        bytes += workload_.payload[static_cast<std::size_t>(seg - 1)];
                    }
                }
                log(EventKind::HostReceive, Node::H2, pkt).aux = bytes;

                Packet ack;
                ack.flow = FlowKey{in.flow.dst_addr, in.flow.src_addr, in.flow.dst_port, in.flow.src_port, in.flow.protocol};
                ack.seq_id = ++rev_seq_;
                ack.kind = PacketKind::Ack;
                ack.direction = Direction::Reverse;
                ack.tcp = r.ack;
                const std::int64_t id = add_packet(ack);
                log(EventKind::HostSend, Node::H2, id);
                transmit(Node::H2, Node::S2, id);
            }

            const Scenario &sc_;
            FaultInjection faults_;
            nf::NfHandle nf_;
            Workload workload_;
            transport::SenderState sender_;
            transport::ReceiverState receiver_;
            Tick msg_delay_;
            Tick t_r_;

            Trace trace_;
            RunStats stats_;
            std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending_;
            std::uint64_t next_seq_ = 0;
            Tick now_ = 0;

            std::vector<Link> links_;
            std::array<int, 64> link_index_{};
            NfInstance src_;
            NfInstance dst_;
            // 0 = host/AM packet, 1 = output of the source NF, 2 = of the destination.
            std::vector<std::uint8_t> nf_origin_;

            Timestamp admit_counter_ = 0;
            std::int64_t fwd_seq_ = 0;
            std::int64_t rev_seq_ = 0;
            std::size_t released_ = 0;
            bool wake_scheduled_ = false;
            bool rto_armed_ = false;
            std::int64_t rto_generation_ = 0;
            std::int64_t rto_backoff_ = 0;

            bool migrating_ = false;
            bool rerouted_ = false;
            bool ended_ = false;
            bool timer_started_ = false;
            Tick timer_deadline_ = 0;
            CspMarker last_src_marker_ = CspMarker::NotInCSP;
            std::int64_t src_unprocessed_ = 0;
            std::int64_t src_pending_exits_ = 0;
            std::array<std::vector<nf::Delta>, 4> unsent_{};
            std::array<std::int64_t, 4> inflight_{};
            std::int64_t other_messages_seen_ = 0;

            std::vector<std::pair<std::int64_t, Node>> buffer_;
            std::vector<bool> is_released_;
            std::int64_t released_unprocessed_ = 0;
        };
    } // namespace

    RunResult run_simulation(const Scenario &sc, const FaultInjection &faults)
    {
        Simulator sim(sc, faults);
        return sim.run();
    }
} // namespace flowmig::fms
