export function emptyView() {
    return { chat: [], plan: [], state: null, connection: "connecting", lastError: null };
}
function chatEntriesFor(message) {
    const entries = [];
    if (message.role === "user") {
        entries.push({ speaker: "USER", text: message.content, pending: false });
    }
    else if (message.role === "system") {
        entries.push({ speaker: "SYSTEM", text: message.content, pending: false });
    }
    else {
        if (message.content) {
            entries.push({ speaker: "DOBBY", text: message.content, pending: false });
        }
        if (message.function_call) {
            entries.push({
                speaker: "FUNCTION CALL",
                text: `${message.function_call.name}(${message.function_call.arguments})`,
                pending: false,
            });
        }
    }
    return entries;
}
function appendMessage(view, message) {
    const chat = [...view.chat];
    if (message.role === "user") {
        // confirm the optimistic echo instead of duplicating it
        const pendingIndex = chat.findIndex((e) => e.pending && e.text === message.content);
        if (pendingIndex >= 0) {
            chat[pendingIndex] = { ...chat[pendingIndex], pending: false };
            return { ...view, chat };
        }
    }
    return { ...view, chat: [...chat, ...chatEntriesFor(message)] };
}
function applyEvent(view, event) {
    const payload = event.payload;
    switch (event.kind) {
        case "plan_started": {
            const titles = payload.titles ?? [];
            return { ...view, plan: titles.map((title) => ({ title, status: "pending" })) };
        }
        case "action_started":
            return withActionStatus(view, payload.index, "active");
        case "action_completed":
            return withActionStatus(view, payload.index, "done");
        case "plan_completed":
            return { ...view, plan: view.plan.map((a) => ({ ...a, status: "done" })) };
        case "plan_cancelled":
            return {
                ...view,
                plan: view.plan.map((a) => a.status === "pending" || a.status === "active"
                    ? { ...a, status: "cancelled" }
                    : a),
            };
        default:
            return view;
    }
}
function withActionStatus(view, index, status) {
    const plan = view.plan.map((action, i) => (i === index ? { ...action, status } : action));
    return { ...view, plan };
}
export function applyFrame(view, frame) {
    switch (frame.type) {
        case "snapshot": {
            let next = {
                ...emptyView(),
                connection: view.connection,
                state: frame.state,
            };
            for (const message of frame.messages) {
                next = appendMessage(next, message);
            }
            for (const event of frame.events) {
                next = applyEvent(next, event);
            }
            return next;
        }
        case "message":
            return appendMessage(view, frame);
        case "event":
            return applyEvent(view, frame);
        case "state":
            return { ...view, state: frame.state };
        case "error":
            return { ...view, lastError: frame.message };
    }
}
export function applyFrames(view, frames) {
    return frames.reduce(applyFrame, view);
}
export function withConnection(view, connection) {
    return { ...view, connection };
}
export function withOptimisticUtterance(view, text) {
    return {
        ...view,
        chat: [...view.chat, { speaker: "USER", text, pending: true }],
    };
}
/** Tour gate shown when the plan is paused between actions. */
export function isGated(view) {
    return view.state?.phase === "gated";
}
//# sourceMappingURL=viewmodel.js.map