// Non-blocking notifications for service errors (409/422/404/disconnect).

export function showToast(container: HTMLElement, message: string, ttlMs = 4000): void {
  const node = document.createElement("div");
  node.className = "toast";
  node.textContent = message;
  container.appendChild(node);
  setTimeout(() => node.remove(), ttlMs);
}
