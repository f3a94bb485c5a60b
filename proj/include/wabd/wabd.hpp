#pragma once

#include "wabd/abd.hpp"
#include "wabd/analysis.hpp"
#include "wabd/analyze.hpp"
#include "wabd/client.hpp"
#include "wabd/experiment.hpp"
#include "wabd/invariants.hpp"
#include "wabd/linearizability.hpp"
#include "wabd/messages.hpp"
#include "wabd/monitor.hpp"
#include "wabd/pwr.hpp"
#include "wabd/quorum.hpp"
#include "wabd/runtime.hpp"
#include "wabd/server.hpp"
#include "wabd/simnet.hpp"
#include "wabd/trace.hpp"
#include "wabd/types.hpp"
#include "wabd/view_changer.hpp"
#include "wabd/views.hpp"
