#pragma once

#include <vector>

#include "rommeo/common.hpp"

namespace rommeo {

/// Fixed-capacity FIFO ring of experience. Sampling is uniform with
/// replacement.
template < class T >
class ReplayBuffer {
 public:
   explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity)
   {
      require(capacity >= 1, "replay buffer capacity must be >= 1");
      entries_.reserve(std::min< std::size_t >(capacity, 1u << 16));
   }

   void push(T item)
   {
      if(entries_.size() < capacity_) {
         entries_.push_back(std::move(item));
      } else {
         entries_[head_] = std::move(item);
         head_ = (head_ + 1) % capacity_;
      }
   }

   [[nodiscard]] std::size_t size() const { return entries_.size(); }
   [[nodiscard]] std::size_t capacity() const { return capacity_; }
   [[nodiscard]] bool empty() const { return entries_.empty(); }

   /// i-th oldest entry.
   const T& operator[](std::size_t i) const { return entries_[(head_ + i) % entries_.size()]; }

   [[nodiscard]] std::vector< T > sample(std::size_t n, Rng& rng) const
   {
      require(! entries_.empty(), "cannot sample from an empty replay buffer");
      std::vector< T > out;
      out.reserve(n);
      for(std::size_t k = 0; k < n; ++k) {
         auto idx = std::size_t(std::generate_canonical< double, 53 >(rng) * double(entries_.size()));
         out.push_back(entries_[std::min(idx, entries_.size() - 1)]);
      }
      return out;
   }

   /// Entries oldest first.
   [[nodiscard]] std::vector< T > ordered() const
   {
      std::vector< T > out;
      out.reserve(entries_.size());
      for(std::size_t i = 0; i < entries_.size(); ++i) {
         out.push_back((*this)[i]);
      }
      return out;
   }

   void clear()
   {
      entries_.clear();
      head_ = 0;
   }

 private:
   std::size_t capacity_;
   std::size_t head_ = 0;
   std::vector< T > entries_;
};

}  // namespace rommeo
