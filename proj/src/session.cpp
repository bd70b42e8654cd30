#include "armteleop/session.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace armteleop {

void SessionConfig::validate() const
{
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
        throw std::invalid_argument("frame_rate must be positive");
    }
    if (!(overlap_epsilon > 0.0)) {
        throw std::invalid_argument("overlap_epsilon must be positive");
    }
    if (1.0 / frame_rate > 0.1) {
        throw std::invalid_argument("frame_rate must be at least 10 Hz");
    }
    ik.validate();
    limits.validate();
}

std::string describe(const MappingEvent& e)
{
    struct {
        std::string operator()(const event::Freeze&) const { return "freeze"; }
        std::string operator()(const event::Unfreeze&) const { return "unfreeze"; }
        std::string operator()(const event::SetScale& s) const
        {
            std::ostringstream os;
            os << "scale " << s.scale;
            return os.str();
        }
        std::string operator()(const event::FlipAxis& f) const
        {
            return f.axis == MirrorAxis::x ? "flip x" : "flip y";
        }
        std::string operator()(const event::SetRotationOffset&) const { return "rotation offset"; }
    } visitor;
    return std::visit(visitor, e);
}

Session::Session(SessionConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))), ik_(cfg_.chain, cfg_.ik), sim_(cfg_.chain, cfg_.limits)
{
    virtual_q_ = sim_.sample().q;
    seed_ = virtual_q_;
    mapping_.rotation_offset = canonical(cfg_.rotation_offset);
}

Pose Session::virtual_tcp() const
{
    return forward_kinematics(cfg_.chain, virtual_q_);
}

HandSample Session::current_hand() const
{
    return last_hand_ ? *last_hand_ : HandSample{};
}

void Session::apply_event(const MappingEvent& e)
{
    const HandSample hand = current_hand();
    const Pose gripper = virtual_tcp();
    EventRecord rec{e, std::nullopt};
    try {
        if (!anchored_) {
            // Before the first sample there is nothing to re-anchor; only the
            // settings carry over to the mapping built on the first frame.
            MappingState next = mapping_;
            std::visit(
                [&](const auto& ev) {
                    using T = std::decay_t<decltype(ev)>;
                    if constexpr (std::is_same_v<T, event::Freeze>) {
                        next.frozen = true;
                    } else if constexpr (std::is_same_v<T, event::Unfreeze>) {
                        if (!next.frozen) throw MappingError("unfreeze: mapping is not frozen");
                        next.frozen = false;
                    } else if constexpr (std::is_same_v<T, event::SetScale>) {
                        if (!std::isfinite(ev.scale)) throw MappingError("set_scale: scale must be finite");
                        next.scale = std::clamp(ev.scale, kMinScale, kMaxScale);
                    } else if constexpr (std::is_same_v<T, event::FlipAxis>) {
                        (ev.axis == MirrorAxis::x ? next.mirror_x : next.mirror_y) *= -1;
                    } else {
                        next.rotation_offset = canonical(ev.offset);
                    }
                },
                e);
            mapping_ = next;
        } else {
            mapping_ = std::visit(
                [&](const auto& ev) -> MappingState {
                    using T = std::decay_t<decltype(ev)>;
                    if constexpr (std::is_same_v<T, event::Freeze>) {
                        return freeze(mapping_, hand);
                    } else if constexpr (std::is_same_v<T, event::Unfreeze>) {
                        return unfreeze(mapping_, hand, gripper);
                    } else if constexpr (std::is_same_v<T, event::SetScale>) {
                        return set_scale(mapping_, ev.scale, hand, gripper);
                    } else if constexpr (std::is_same_v<T, event::FlipAxis>) {
                        return flip_axis(mapping_, ev.axis, hand, gripper);
                    } else {
                        return set_rotation_offset(mapping_, ev.offset, hand, gripper);
                    }
                },
                e);
        }
    } catch (const MappingError& err) {
        rec.rejected = err.what();
        staged_events_.push_back(std::move(rec));
        throw;
    }
    staged_events_.push_back(std::move(rec));
}

FrameOutput Session::tick(const HandSample& hand)
{
    if (last_hand_ && hand.timestamp < last_hand_->timestamp) {
        throw std::invalid_argument("tick: hand timestamp went backwards");
    }
    last_hand_ = hand;

    if (!anchored_) {
        const MappingState settings = mapping_;
        const Pose home = virtual_tcp();
        mapping_ = new_mapping(hand, home);
        mapping_.scale = settings.scale;
        mapping_.mirror_x = settings.mirror_x;
        mapping_.mirror_y = settings.mirror_y;
        mapping_ = set_rotation_offset(mapping_, settings.rotation_offset, hand, home);
        if (settings.frozen) mapping_ = freeze(mapping_, hand);
        anchored_ = true;
    }

    FrameOutput out;
    out.frame_index = log_.size();
    out.target = map_hand(mapping_, hand);
    out.embodiment_active = !mapping_.frozen;
    out.scale = mapping_.scale;
    out.mirror_x = mapping_.mirror_x;
    out.mirror_y = mapping_.mirror_y;

    const double now = sim_.sample().time;
    if (out.embodiment_active) {
        const IkSolution sol = ik_.solve(out.target.pose, seed_);
        // Seed the next frame from the raw solution, reachable or not:
        // holding it on the last accepted pose can leave the solver too far
        // away to catch up within one frame. While tracking, extrapolate the
        // last step; three generations alone trail a hand moving faster
        // than about 2 cm/s.
        if (sol.reachable && prev_raw_) {
            seed_ = clamp_to_limits(cfg_.chain, 2.0 * sol.q - *prev_raw_);
        } else {
            seed_ = sol.q;
        }
        prev_raw_ = sol.reachable ? std::optional<JointConfig>(sol.q) : std::nullopt;
        if (sol.reachable) {
            virtual_q_ = smooth(virtual_q_, sol.q, cfg_.ik.smoothing_alpha);
            JointCommand cmd{virtual_q_, out.target.openness_mm};
            if (!last_command_ || last_command_->q != cmd.q || last_command_->openness_mm != cmd.openness_mm) {
                sim_.enqueue_command(cmd, now);
                last_command_ = std::move(cmd);
            }
        } else {
            out.anomaly = true;
        }
    } else {
        prev_raw_.reset();
    }

    out.physical = sim_.step(1.0 / cfg_.frame_rate);
    out.time = out.physical.time;
    out.virtual_q = virtual_q_;
    out.overlap = (virtual_q_ - out.physical.q).cwiseAbs().maxCoeff() <= cfg_.overlap_epsilon;
    out.lag_distance = (virtual_tcp().position - out.physical.tcp_pose.position).norm();

    log_.push_back(LogRecord{hand, out, std::move(staged_events_)});
    staged_events_.clear();
    return out;
}

SessionLog replay(const SessionConfig& cfg, const Trace& trace)
{
    Session session(cfg);
    double last_t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const TraceEntry& entry = trace[i];
        if (!(entry.t >= last_t)) {
            throw std::invalid_argument("replay: timestamp regression at entry " + std::to_string(i + 1));
        }
        last_t = entry.t;
        if (const auto* hand = std::get_if<HandSample>(&entry.item)) {
            session.tick(*hand);
        } else {
            try {
                session.apply_event(std::get<MappingEvent>(entry.item));
            } catch (const MappingError&) {
                // logged with the next frame
            }
        }
    }
    return session.log();
}

} // namespace armteleop
