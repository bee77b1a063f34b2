// SPDX-License-Identifier: Apache-2.0
#include "fusecast/feed.hpp"

#include <algorithm>

namespace fusecast {

std::optional<Subscription::Item> Subscription::next(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mutex_);
    if (!ready_.wait_for(lock, timeout, [this] { return !queue_.empty() || closed_; })) {
        return std::nullopt;
    }
    if (queue_.empty()) {
        return std::nullopt;
    }
    Item item = std::move(queue_.front());
    queue_.pop_front();
    ++delivered_;
    return item;
}

void Subscription::push(Item item)
{
    {
        std::lock_guard lock(mutex_);
        if (closed_) {
            return;
        }
        while (queue_.size() >= depth_) {
            queue_.pop_front();
            ++dropped_;
        }
        queue_.push_back(std::move(item));
    }
    ready_.notify_one();
}

void Subscription::close()
{
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    ready_.notify_all();
}

bool Subscription::closed() const
{
    std::lock_guard lock(mutex_);
    return closed_;
}

std::uint64_t Subscription::delivered() const
{
    std::lock_guard lock(mutex_);
    return delivered_;
}

std::uint64_t Subscription::dropped() const
{
    std::lock_guard lock(mutex_);
    return dropped_;
}

void FrameFeed::publish(FusedFramePtr frame)
{
    std::vector<std::shared_ptr<Subscription>> targets;
    {
        std::lock_guard lock(mutex_);
        if (closed_) {
            return;
        }
        latest_ = frame;
        std::erase_if(subs_, [](const auto& s) { return s->closed(); });
        targets = subs_;
    }
    published_.notify_all();
    const Micros now = monotonic_us();
    for (auto& s : targets) {
        s->push({frame, now});
    }
}

std::shared_ptr<Subscription> FrameFeed::subscribe()
{
    auto s = std::make_shared<Subscription>(depth_);
    std::lock_guard lock(mutex_);
    if (closed_) {
        s->close();
    } else {
        subs_.push_back(s);
    }
    return s;
}

FusedFramePtr FrameFeed::latest() const
{
    std::lock_guard lock(mutex_);
    return latest_;
}

FusedFramePtr FrameFeed::wait_for(std::uint64_t min_seq, std::chrono::milliseconds timeout) const
{
    std::unique_lock lock(mutex_);
    published_.wait_for(lock, timeout, [&] { return closed_ || (latest_ && latest_->frame_seq >= min_seq); });
    if (latest_ && latest_->frame_seq >= min_seq) {
        return latest_;
    }
    return nullptr;
}

std::size_t FrameFeed::subscriber_count() const
{
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(subs_.begin(), subs_.end(), [](const auto& s) { return !s->closed(); }));
}

void FrameFeed::close()
{
    std::vector<std::shared_ptr<Subscription>> subs;
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        subs.swap(subs_);
    }
    published_.notify_all();
    for (auto& s : subs) {
        s->close();
    }
}

} // namespace fusecast
