//  Copyright 2018 U.C. Berkeley RISE Lab
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "annakv/meta_view.hpp"

namespace annakv {

MetaViewPtr with_member(const MetaViewPtr& view, Tier tier,
                        const RingMember& member) {
  MetaView next = *view;
  at_tier(next.rings.global, tier).insert(member);
  next.version = view->version + 1;
  return make_view(std::move(next));
}

MetaViewPtr without_member(const MetaViewPtr& view, Tier tier,
                           const NodeId& node) {
  MetaView next = *view;
  at_tier(next.rings.global, tier).remove(node);
  next.version = view->version + 1;
  return make_view(std::move(next));
}

MetaViewPtr with_rv(const MetaViewPtr& view, const std::string& key,
                    const ReplicationVector& rv) {
  MetaView next = *view;
  if (rv == default_vector(next.k))
    next.rv_overrides.erase(key);
  else
    next.rv_overrides[key] = rv;
  next.version = view->version + 1;
  return make_view(std::move(next));
}

}  // namespace annakv
